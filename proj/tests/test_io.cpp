#include <doctest.h>

#include <sstream>

#include "support.hpp"
#include "tmis/errors.hpp"
#include "tmis/harness.hpp"
#include "tmis/io.hpp"

using namespace tmis;
namespace tt = tmis::testing;
using nlohmann::json;

TEST_CASE("model and policy JSON round trip") {
  CounterRng rng(1);
  const Dims d{3, 2, 4};
  const TabularMDP mdp = tt::random_mdp(d, rng, RewardNoise::Bernoulli, true);
  const TabularMDP back = io::mdp_from_json(json::parse(io::to_json(mdp).dump()));
  CHECK(back.dims() == d);
  CHECK(back.noise() == RewardNoise::Bernoulli);
  CHECK(back.raw_transitions() == mdp.raw_transitions());
  CHECK(back.raw_mean_rewards() == mdp.raw_mean_rewards());
  CHECK(std::vector<double>(back.initial_dist().begin(), back.initial_dist().end()) ==
        std::vector<double>(mdp.initial_dist().begin(), mdp.initial_dist().end()));

  const Policy pi = tt::random_policy(d, rng);
  CHECK(io::policy_from_json(json::parse(io::to_json(pi).dump())).table() == pi.table());

  const json j = io::to_json(build_paper_mdp(4).mdp);
  CHECK(j.at("P").size() == 3);
  CHECK(j.at("P")[0].size() == 2);
  CHECK(j.at("r").size() == 4);
  CHECK(j.at("noise") == "deterministic");
}

TEST_CASE("malformed model and policy documents") {
  json good = io::to_json(single_path_instance(2).mdp);
  CHECK_NOTHROW(io::mdp_from_json(good));

  json missing = good;
  missing.erase("P");
  CHECK_THROWS_AS(io::mdp_from_json(missing), FormatError);

  json bad_noise = good;
  bad_noise["noise"] = "gaussian";
  CHECK_THROWS_AS(io::mdp_from_json(bad_noise), FormatError);

  json bad_prob = good;
  bad_prob["d1"] = {0.5};
  CHECK_THROWS_AS(io::mdp_from_json(bad_prob), ConfigError);

  json shallow = good;
  shallow["r"] = {1.0, 1.0};
  CHECK_THROWS_AS(io::mdp_from_json(shallow), FormatError);

  CHECK_THROWS_AS(io::policy_from_json(json{{"S", 1}, {"A", 2}, {"H", 1}, {"pi", {{{0.5, "x"}}}}}), FormatError);
  CHECK_THROWS_AS(io::policy_from_json(json{{"S", 1}, {"A", 2}, {"H", 1}, {"pi", {{{0.5, 0.6}}}}}), ConfigError);
  CHECK_THROWS_AS(io::read_mdp("/nonexistent/model.json"), FormatError);
}

TEST_CASE("dataset JSONL and CSV round trips") {
  CounterRng rng(2);
  const Dims d{3, 2, 5};
  const TabularMDP mdp = tt::random_mdp(d, rng);
  const Dataset data = sample_dataset(mdp, tt::random_policy(d, rng), 40, 3);

  std::stringstream jsonl, csv;
  io::write_dataset_jsonl(jsonl, data);
  io::write_dataset_csv(csv, data);
  CHECK(io::read_dataset_jsonl(jsonl, 3, 2) == data);
  CHECK(io::read_dataset_csv(csv, 3, 2) == data);

  std::stringstream hand("[[0,0,1],[1,1,0]]\n\n[[0,1,0],[0,0,1]]\n");
  CHECK(io::read_dataset_jsonl(hand, 2, 2) ==
        tt::make_dataset({2, 2, 2}, {{{0, 0, 1.0}, {1, 1, 0.0}}, {{0, 1, 0.0}, {0, 0, 1.0}}}));
}

TEST_CASE("malformed datasets") {
  auto jsonl = [](const std::string& text) {
    std::stringstream in(text);
    return io::read_dataset_jsonl(in, 2, 2);
  };
  auto csv = [](const std::string& text) {
    std::stringstream in(text);
    return io::read_dataset_csv(in, 2, 2);
  };
  CHECK_THROWS_AS(jsonl(""), FormatError);
  CHECK_THROWS_AS(jsonl("[]\n"), FormatError);
  CHECK_THROWS_AS(jsonl("{\"s\":1}\n"), FormatError);
  CHECK_THROWS_AS(jsonl("[[0,0]]\n"), FormatError);
  CHECK_THROWS_AS(jsonl("[[0,0,1]\n"), FormatError);
  CHECK_THROWS_AS(jsonl("[[0,0,1],[1,1,0]]\n[[0,0,1]]\n"), FormatError);
  CHECK_THROWS_AS(jsonl("[[0,2,1]]\n"), FormatError);
  CHECK_THROWS_AS(jsonl("[[5,0,1]]\n"), FormatError);

  CHECK_THROWS_AS(csv(""), FormatError);
  CHECK_THROWS_AS(csv("ep,t,s,a,r\n0,0,0,0,1\n"), FormatError);
  CHECK_THROWS_AS(csv("episode,t,s,a,r\n"), FormatError);
  CHECK_THROWS_AS(csv("episode,t,s,a,r\n1,0,0,0,1\n"), FormatError);
  CHECK_THROWS_AS(csv("episode,t,s,a,r\n0,1,0,0,1\n"), FormatError);
  CHECK_THROWS_AS(csv("episode,t,s,a,r\n0,0,0;0,1\n"), FormatError);
  CHECK_NOTHROW(csv("episode,t,s,a,r\r\n0,0,1,1,0.5\r\n1,0,0,0,1\r\n"));
}
