#include <catch2/catch_amalgamated.hpp>

#include "mshmm/config.hpp"

using namespace mshmm;

TEST_CASE("configs round-trip through their canonical serialization") {
  RunConfig c;
  c.seed = 42;
  c.scaling = "advective";
  c.model.name = "custom";
  c.model.M = 2;
  c.model.lambda = {0.0, 2.0, 5.0};
  c.model.q = {0.0, 1.0, 1.0};
  c.model.tensor_entries = {{1, 1, 1, 1.0}, {2, 2, 1, 2.0}, {3, 3, 1, 5.0}};
  c.hmm.p = 6;
  c.hmm.epsilon = 0.001;
  c.hmm.dt_macro = 0.01;
  c.T = 0.5;
  c.X0 = 0.0;
  const auto j = to_json(c);
  const auto back = config_from_json(j);
  REQUIRE(to_json(back) == j);
  REQUIRE(back.seed == 42);
  REQUIRE(back.model.lambda == c.model.lambda);
  REQUIRE(back.hmm.n_macro == 50);
}

TEST_CASE("validation rejects malformed configs with precise messages") {
  REQUIRE_THROWS_AS(config_from_json({{"scaling", "parabolic"}}), ConfigError);
  REQUIRE_THROWS_AS(config_from_json({{"model", {{"name", "heat"}}}}), ConfigError);
  REQUIRE_THROWS_AS(config_from_json({{"model", {{"M", 0}}}}), ConfigError);
  REQUIRE_THROWS_AS(config_from_json({{"model", {{"boundary", "periodic"}}}}), ConfigError);
  REQUIRE_THROWS_AS(config_from_json({{"scaling", "advective"}}), ConfigError); // no epsilon
  REQUIRE_THROWS_AS(config_from_json({{"model", {{"name", "custom"}}}}), ConfigError);
  REQUIRE_THROWS_AS(config_from_json({{"T", 0.01}, {"hmm", {{"dt_macro", 0.1}}}}), ConfigError);

  try {
    config_from_json({{"scaling", "parabolic"}});
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    REQUIRE(std::string(e.what()).find("parabolic") != std::string::npos);
  }
}

TEST_CASE("defaults produce a runnable configuration") {
  const auto c = config_from_json(nlohmann::json::object());
  REQUIRE(c.model.name == "burgers");
  REQUIRE(c.scaling == "diffusive");
  REQUIRE(c.hmm.n_macro == 10);
  REQUIRE_NOTHROW(build_model(c.model));
}

TEST_CASE("custom models require exactly one kernel mode") {
  ModelConfig m;
  m.name = "custom";
  m.M = 1;
  m.lambda = {0.0, 0.0, 3.0};
  m.tensor_entries = {{1, 1, 1, 1.0}};
  REQUIRE_THROWS_AS(build_model(m), ConfigError);
  m.lambda = {1.0, 3.0};
  REQUIRE_THROWS_AS(build_model(m), ConfigError);
  m.lambda = {0.0, 3.0};
  REQUIRE_NOTHROW(build_model(m));
}

TEST_CASE("noise override must cover the truncation") {
  ModelConfig m;
  m.M = 3;
  m.q = {0.0, 1.0};
  REQUIRE_THROWS_AS(build_model(m), ConfigError);
  m.q = {0.0, 1.0, 0.5, 0.5};
  const auto spec = build_model(m);
  REQUIRE(spec.noise(3) == 0.5);
}

TEST_CASE("model hash is stable and sensitive to the model block") {
  ModelConfig a;
  ModelConfig b;
  REQUIRE(model_hash(a) == model_hash(b));
  b.M = 3;
  REQUIRE(model_hash(a) != model_hash(b));
  b = a;
  b.nu = 0.1;
  REQUIRE(model_hash(a) != model_hash(b));
}

TEST_CASE("manifest embeds the config and the model hash") {
  RunConfig c;
  const auto m = make_manifest(c);
  REQUIRE(m.contains("config"));
  REQUIRE(m["model_hash"] == model_hash(c.model));
  REQUIRE(config_from_json(m["config"]).seed == c.seed);
}
