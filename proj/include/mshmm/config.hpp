#ifndef MSHMM_CONFIG_HPP
#define MSHMM_CONFIG_HPP

#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "mshmm/hmm.hpp"
#include "mshmm/spectral.hpp"

// Run configuration: a JSON document binding a model block, the scaling, the
// micro/macro schedule and the experiment options. Configurations round-trip
// through their canonical serialization, and every output file embeds the
// content hash of the model block plus the seed, so any run can be reproduced
// from its manifest.

namespace mshmm {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ModelConfig {
  std::string name = "burgers"; // burgers | ks | custom
  std::string boundary = "dirichlet";
  int M = 2;
  double nu = 0.0;
  std::vector<double> q;   // empty: "ones" (flat, zero on the kernel mode)
  // custom model only:
  std::vector<double> lambda;                          // per global mode
  std::vector<std::array<double, 4>> tensor_entries;   // rows (k, l, m, value)
};

struct RunConfig {
  std::uint64_t seed = 1;
  std::string scaling = "diffusive"; // diffusive | advective
  ModelConfig model;
  HmmParams hmm;
  double T = 1.0;
  double X0 = 0.5;
  // harness block
  int n_seeds = 8;
  int p_min = 1, p_max = 5;
  bool mixed_eval = false;
  double row_time_cap_s = 600.0;
  int workers = 0;
};

namespace detail {

inline nlohmann::json model_to_json(const ModelConfig& m) {
  nlohmann::json j;
  j["name"] = m.name;
  j["boundary"] = m.boundary;
  j["M"] = m.M;
  j["nu"] = m.nu;
  if (m.q.empty())
    j["q"] = "ones";
  else
    j["q"] = m.q;
  if (m.name == "custom") {
    j["lambda"] = m.lambda;
    auto rows = nlohmann::json::array();
    for (const auto& e : m.tensor_entries) rows.push_back({e[0], e[1], e[2], e[3]});
    j["tensor"] = rows;
  }
  return j;
}

inline ModelConfig model_from_json(const nlohmann::json& j) {
  ModelConfig m;
  m.name = j.value("name", "burgers");
  if (m.name != "burgers" && m.name != "ks" && m.name != "custom")
    throw ConfigError("model.name must be burgers | ks | custom, got '" + m.name + "'");
  m.boundary = j.value("boundary", "dirichlet");
  if (m.boundary != "dirichlet")
    throw ConfigError("model.boundary: only 'dirichlet' is supported");
  m.M = j.value("M", 2);
  if (m.M < 1) throw ConfigError("model.M must be >= 1");
  m.nu = j.value("nu", 0.0);
  if (j.contains("q") && j["q"].is_array())
    m.q = j["q"].get<std::vector<double>>();
  else if (j.contains("q") && j["q"] != "ones")
    throw ConfigError("model.q must be a list or \"ones\"");
  if (m.name == "custom") {
    if (!j.contains("lambda") || !j.contains("tensor"))
      throw ConfigError("custom model needs explicit 'lambda' and 'tensor' lists");
    m.lambda = j["lambda"].get<std::vector<double>>();
    for (const auto& row : j["tensor"]) {
      if (!row.is_array() || row.size() != 4)
        throw ConfigError("tensor rows must be [k, l, m, value]");
      m.tensor_entries.push_back(
          {row[0].get<double>(), row[1].get<double>(), row[2].get<double>(), row[3].get<double>()});
    }
  }
  return m;
}

} // namespace detail

inline nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json j;
  j["seed"] = c.seed;
  j["scaling"] = c.scaling;
  j["model"] = detail::model_to_json(c.model);
  nlohmann::json h;
  h["p"] = c.hmm.p;
  if (c.hmm.h > 0.0) h["h"] = c.hmm.h;
  h["K"] = c.hmm.K;
  if (c.hmm.L > 0) h["L"] = c.hmm.L;
  if (c.hmm.Lp > 0) h["Lp"] = c.hmm.Lp;
  h["lT"] = c.hmm.lT;
  h["dt_macro"] = c.hmm.dt_macro;
  if (c.scaling == "advective") h["epsilon"] = c.hmm.epsilon;
  h["include_b1"] = c.hmm.include_b1;
  j["hmm"] = h;
  j["T"] = c.T;
  j["X0"] = c.X0;
  nlohmann::json ha;
  ha["seeds"] = c.n_seeds;
  ha["p_min"] = c.p_min;
  ha["p_max"] = c.p_max;
  ha["mixed_eval"] = c.mixed_eval;
  ha["row_time_cap_s"] = c.row_time_cap_s;
  ha["workers"] = c.workers;
  j["harness"] = ha;
  return j;
}

inline RunConfig config_from_json(const nlohmann::json& j) {
  RunConfig c;
  c.seed = j.value("seed", std::uint64_t{1});
  c.scaling = j.value("scaling", "diffusive");
  if (c.scaling != "diffusive" && c.scaling != "advective")
    throw ConfigError("scaling must be diffusive | advective, got '" + c.scaling + "'");
  if (j.contains("model")) c.model = detail::model_from_json(j["model"]);
  if (j.contains("hmm")) {
    const auto& h = j["hmm"];
    c.hmm.p = h.value("p", 4);
    c.hmm.h = h.value("h", 0.0);
    c.hmm.K = h.value("K", 1);
    c.hmm.L = h.value("L", 0L);
    c.hmm.Lp = h.value("Lp", 0L);
    c.hmm.lT = h.value("lT", 16L);
    c.hmm.dt_macro = h.value("dt_macro", 0.1);
    c.hmm.epsilon = h.value("epsilon", 0.0);
    c.hmm.include_b1 = h.value("include_b1", false);
  }
  c.T = j.value("T", 1.0);
  c.X0 = j.value("X0", 0.5);
  if (j.contains("harness")) {
    const auto& ha = j["harness"];
    c.n_seeds = ha.value("seeds", 8);
    c.p_min = ha.value("p_min", 1);
    c.p_max = ha.value("p_max", 5);
    c.mixed_eval = ha.value("mixed_eval", false);
    c.row_time_cap_s = ha.value("row_time_cap_s", 600.0);
    c.workers = ha.value("workers", 0);
  }
  if (c.scaling == "advective" && c.hmm.epsilon <= 0.0)
    throw ConfigError("advective scaling requires hmm.epsilon > 0");
  c.hmm.n_macro = static_cast<int>(std::lround(c.T / c.hmm.dt_macro));
  if (c.hmm.n_macro < 1) throw ConfigError("T / dt_macro must give at least one macro step");
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config parse error in '" + path + "': " + e.what());
  }
  return config_from_json(j);
}

/// Model assembled from the config block. Custom models supply explicit
/// (lambda, q, tensor) lists; kernel size is the count of leading zero rates.
inline ModelSpec build_model(const ModelConfig& m) {
  ModelSpec spec;
  const int modes = m.M + 1;
  if (m.name == "burgers") {
    spec = burgers_model(m.M, m.nu);
  } else if (m.name == "ks") {
    spec = ks_model(m.M, m.nu);
  } else {
    if (static_cast<int>(m.lambda.size()) < modes)
      throw ConfigError("custom model: lambda list shorter than M + 1 modes");
    spec.spectrum.lambdas = m.lambda;
    spec.spectrum.null_dim = 0;
    for (double l : m.lambda) {
      if (l != 0.0) break;
      ++spec.spectrum.null_dim;
    }
    if (spec.spectrum.null_dim != 1)
      throw ConfigError("custom model: exactly one leading zero rate required");
    for (const auto& e : m.tensor_entries)
      spec.tensor.add(static_cast<int>(e[0]), static_cast<int>(e[1]),
                      static_cast<int>(e[2]), e[3]);
    spec.tensor.basis_scale = uniform_basis_scale(static_cast<int>(m.lambda.size()), 1.0);
    spec.noise = flat_noise(static_cast<int>(m.lambda.size()), spec.spectrum.null_dim, 1.0);
    spec.nu = m.nu;
  }
  if (!m.q.empty()) {
    if (static_cast<int>(m.q.size()) < modes)
      throw ConfigError("model.q list shorter than M + 1 modes");
    spec.noise.q = m.q;
  }
  return spec;
}

/// FNV-1a content hash of the canonical model serialization.
inline std::string model_hash(const ModelConfig& m) {
  const std::string s = detail::model_to_json(m).dump();
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

/// Full run manifest; re-running a command from it reproduces the output
/// files byte-identically.
inline nlohmann::json make_manifest(const RunConfig& c) {
  nlohmann::json j;
  j["config"] = to_json(c);
  j["model_hash"] = model_hash(c.model);
  j["generator"] = "splitmix64-boxmuller";
  return j;
}

} // namespace mshmm

#endif // MSHMM_CONFIG_HPP
