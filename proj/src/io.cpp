#include "tmis/io.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "tmis/errors.hpp"

namespace tmis::io {

using nlohmann::json;

namespace {

template <class T>
T field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw FormatError(std::string("missing field \"") + key + "\"");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("field \"") + key + "\": " + e.what());
  }
}

// Flattens a nested array whose depth is known; every leaf must be a number.
void flatten(const json& j, int depth, std::vector<double>& out, const char* key) {
  if (depth == 0) {
    if (!j.is_number()) throw FormatError(std::string("field \"") + key + "\" has a non-numeric entry");
    out.push_back(j.get<double>());
    return;
  }
  if (!j.is_array()) throw FormatError(std::string("field \"") + key + "\" is nested too shallowly");
  for (const auto& child : j) flatten(child, depth - 1, out, key);
}

std::vector<double> flat_field(const json& j, const char* key, int depth) {
  if (!j.contains(key)) throw FormatError(std::string("missing field \"") + key + "\"");
  std::vector<double> out;
  flatten(j.at(key), depth, out, key);
  return out;
}

json nest(const std::vector<double>& flat, std::span<const int> shape, std::size_t& pos) {
  json arr = json::array();
  if (shape.size() == 1) {
    for (int k = 0; k < shape[0]; ++k) arr.push_back(flat[pos++]);
    return arr;
  }
  for (int k = 0; k < shape[0]; ++k) arr.push_back(nest(flat, shape.subspan(1), pos));
  return arr;
}

json nest(const std::vector<double>& flat, std::initializer_list<int> shape) {
  std::vector<int> dims(shape);
  std::size_t pos = 0;
  if (dims.front() == 0) return json::array();
  return nest(flat, std::span<const int>(dims), pos);
}

Dims dims_from(const json& j) {
  return Dims{field<int>(j, "S"), field<int>(j, "A"), field<int>(j, "H")};
}

}  // namespace

json to_json(const TabularMDP& mdp) {
  const Dims d = mdp.dims();
  json j;
  j["S"] = d.states;
  j["A"] = d.actions;
  j["H"] = d.horizon;
  j["d1"] = std::vector<double>(mdp.initial_dist().begin(), mdp.initial_dist().end());
  j["P"] = nest(mdp.raw_transitions(), {d.horizon - 1, d.states, d.actions, d.states});
  j["r"] = nest(mdp.raw_mean_rewards(), {d.horizon, d.states, d.actions});
  j["noise"] = mdp.noise() == RewardNoise::Bernoulli ? "bernoulli" : "deterministic";
  j["r_max"] = mdp.reward_max();
  return j;
}

TabularMDP mdp_from_json(const json& j) {
  const Dims d = dims_from(j);
  RewardNoise noise = RewardNoise::Deterministic;
  if (j.contains("noise")) {
    const auto name = field<std::string>(j, "noise");
    if (name == "bernoulli") noise = RewardNoise::Bernoulli;
    else if (name != "deterministic") throw FormatError("unknown noise law \"" + name + "\"");
  }
  const double r_max = j.contains("r_max") ? field<double>(j, "r_max") : 1.0;
  return TabularMDP(d, flat_field(j, "d1", 1), flat_field(j, "P", 4), flat_field(j, "r", 3), noise, r_max);
}

json to_json(const Policy& policy) {
  const Dims d = policy.dims();
  json j;
  j["S"] = d.states;
  j["A"] = d.actions;
  j["H"] = d.horizon;
  j["pi"] = nest(policy.table(), {d.horizon, d.states, d.actions});
  return j;
}

Policy policy_from_json(const json& j) { return Policy(dims_from(j), flat_field(j, "pi", 3)); }

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << contents;
  if (!out) throw FormatError("write failed for " + path.string());
}

TabularMDP read_mdp(const std::filesystem::path& path) { return mdp_from_json(read_json_file(path)); }

Policy read_policy(const std::filesystem::path& path) { return policy_from_json(read_json_file(path)); }

namespace {

Dataset assemble(const std::vector<Trajectory>& episodes, int num_states, int num_actions) {
  if (episodes.empty()) throw FormatError("dataset has no episodes");
  if (episodes.front().steps.empty()) throw FormatError("dataset episode 0 has no steps");
  Dataset data(Dims{num_states, num_actions, static_cast<int>(episodes.front().steps.size())});
  data.reserve(episodes.size());
  for (std::size_t i = 0; i < episodes.size(); ++i) {
    try {
      data.append(episodes[i]);
    } catch (const ConfigError& e) {
      throw FormatError("dataset episode " + std::to_string(i) + ": " + e.what());
    }
  }
  return data;
}

}  // namespace

void write_dataset_jsonl(std::ostream& out, const Dataset& data) {
  for (std::size_t i = 0; i < data.size(); ++i) {
    json episode = json::array();
    for (int t = 0; t < data.horizon(); ++t)
      episode.push_back(json::array({data.state(i, t), data.action(i, t), data.reward(i, t)}));
    out << episode.dump() << '\n';
  }
}

void write_dataset_csv(std::ostream& out, const Dataset& data) {
  out << "episode,t,s,a,r\n";
  for (std::size_t i = 0; i < data.size(); ++i)
    for (int t = 0; t < data.horizon(); ++t)
      out << i << ',' << t << ',' << data.state(i, t) << ',' << data.action(i, t) << ','
          << json(data.reward(i, t)).dump() << '\n';
}

Dataset read_dataset_jsonl(std::istream& in, int num_states, int num_actions) {
  std::vector<Trajectory> episodes;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw FormatError("dataset line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!j.is_array()) throw FormatError("dataset line " + std::to_string(line_no) + " is not an array");
    Trajectory episode;
    for (const auto& triple : j) {
      if (!triple.is_array() || triple.size() != 3 || !triple[0].is_number_integer() ||
          !triple[1].is_number_integer() || !triple[2].is_number())
        throw FormatError("dataset line " + std::to_string(line_no) + ": steps must be [s, a, r]");
      episode.steps.push_back({triple[0].get<int>(), triple[1].get<int>(), triple[2].get<double>()});
    }
    episodes.push_back(std::move(episode));
  }
  return assemble(episodes, num_states, num_actions);
}

Dataset read_dataset_csv(std::istream& in, int num_states, int num_actions) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("dataset CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "episode,t,s,a,r") throw FormatError("dataset CSV header must be \"episode,t,s,a,r\"");

  std::vector<Trajectory> episodes;
  long long current = -1;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream row(line);
    long long episode = 0;
    int t = 0, s = 0, a = 0;
    double r = 0.0;
    char c1 = 0, c2 = 0, c3 = 0, c4 = 0;
    if (!(row >> episode >> c1 >> t >> c2 >> s >> c3 >> a >> c4 >> r) || c1 != ',' || c2 != ',' || c3 != ',' ||
        c4 != ',')
      throw FormatError("dataset CSV line " + std::to_string(line_no) + " is malformed");
    if (episode != current) {
      if (episode != current + 1)
        throw FormatError("dataset CSV line " + std::to_string(line_no) + ": episodes must be consecutive from 0");
      episodes.emplace_back();
      current = episode;
    }
    if (t != static_cast<int>(episodes.back().steps.size()))
      throw FormatError("dataset CSV line " + std::to_string(line_no) + ": steps must be ordered by t from 0");
    episodes.back().steps.push_back({s, a, r});
  }
  return assemble(episodes, num_states, num_actions);
}

Dataset read_dataset(const std::filesystem::path& path, int num_states, int num_actions) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  if (path.extension() == ".csv") return read_dataset_csv(in, num_states, num_actions);
  return read_dataset_jsonl(in, num_states, num_actions);
}

}  // namespace tmis::io
