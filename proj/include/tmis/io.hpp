#pragma once

// File formats.
//
// Model JSON:   {"S","A","H","d1":[S],"P":[H-1][S][A][S],"r":[H][S][A],
//                "noise":"deterministic"|"bernoulli","r_max"}
// Policy JSON:  {"S","A","H","pi":[H][S][A]}
// Dataset JSONL: one episode per line, a JSON array of [s, a, r] triples.
// Dataset CSV:  header "episode,t,s,a,r", one row per step, rows grouped by
//               episode and ordered by t.
// All indices (episode, t, s, a) are 0-based.

#include <filesystem>
#include <iosfwd>
#include <string>

#include <json.hpp>

#include "tmis/mdp.hpp"

namespace tmis::io {

nlohmann::json to_json(const TabularMDP& mdp);
TabularMDP mdp_from_json(const nlohmann::json& j);

nlohmann::json to_json(const Policy& policy);
Policy policy_from_json(const nlohmann::json& j);

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& contents);

TabularMDP read_mdp(const std::filesystem::path& path);
Policy read_policy(const std::filesystem::path& path);

void write_dataset_jsonl(std::ostream& out, const Dataset& data);
void write_dataset_csv(std::ostream& out, const Dataset& data);

/// S and A come from the caller (the model or policy the data belongs to);
/// H is taken from the first episode.
Dataset read_dataset_jsonl(std::istream& in, int num_states, int num_actions);
Dataset read_dataset_csv(std::istream& in, int num_states, int num_actions);

/// Picks the CSV reader for a ".csv" extension, JSONL otherwise.
Dataset read_dataset(const std::filesystem::path& path, int num_states, int num_actions);

}  // namespace tmis::io
