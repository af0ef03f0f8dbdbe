#include "activedpo/serialize.hpp"

#include "activedpo/errors.hpp"

namespace activedpo {

using nlohmann::json;

void to_json(json& j, const Triplet& t) {
  j = json{{"id", t.id},
           {"prompt", t.prompt},
           {"response_a", t.response_a},
           {"response_b", t.response_b},
           {"origin_iteration", t.origin_iteration}};
}

void from_json(const json& j, Triplet& t) {
  j.at("id").get_to(t.id);
  j.at("prompt").get_to(t.prompt);
  j.at("response_a").get_to(t.response_a);
  j.at("response_b").get_to(t.response_b);
  j.at("origin_iteration").get_to(t.origin_iteration);
}

void to_json(json& j, const PreferenceRecord& r) {
  j = json{{"triplet_id", r.triplet_id},
           {"winner", to_string(r.winner)},
           {"source", to_string(r.source)},
           {"labeled_at_iteration", r.labeled_at_iteration}};
}

void from_json(const json& j, PreferenceRecord& r) {
  j.at("triplet_id").get_to(r.triplet_id);
  const auto winner = parse_side(j.at("winner").get<std::string>());
  const auto source = parse_label_source(j.at("source").get<std::string>());
  if (!winner) throw FormatError("invalid winner in preference record");
  if (!source) throw FormatError("invalid source in preference record");
  r.winner = *winner;
  r.source = *source;
  j.at("labeled_at_iteration").get_to(r.labeled_at_iteration);
}

json metrics_row(const Metrics& m) {
  return json{{"iteration", m.iteration},
              {"selector", m.selector},
              {"labels_used", m.labels_used},
              {"mean_true_reward", m.mean_true_reward},
              {"win_rate", m.win_rate},
              {"train_initial_loss", m.train_initial_loss},
              {"train_final_loss", m.train_final_loss},
              {"param_distance", m.param_distance},
              {"pool_size", m.pool_size},
              {"pool_dropped", m.pool_dropped}};
}

void to_json(json& j, const Metrics& m) {
  j = metrics_row(m);
  j["wall_time"] = m.wall_time;
}

void from_json(const json& j, Metrics& m) {
  j.at("iteration").get_to(m.iteration);
  j.at("selector").get_to(m.selector);
  j.at("labels_used").get_to(m.labels_used);
  j.at("mean_true_reward").get_to(m.mean_true_reward);
  j.at("win_rate").get_to(m.win_rate);
  j.at("train_initial_loss").get_to(m.train_initial_loss);
  j.at("train_final_loss").get_to(m.train_final_loss);
  j.at("param_distance").get_to(m.param_distance);
  j.at("pool_size").get_to(m.pool_size);
  j.at("pool_dropped").get_to(m.pool_dropped);
  m.wall_time = j.value("wall_time", 0.0);
}

}  // namespace activedpo
