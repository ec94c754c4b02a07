#include "meltctl/config.hpp"

#include <algorithm>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cmath>
#include <fstream>
#include <map>
#include <regex>
#include <set>
#include <sstream>
#include <vector>

#include "meltctl/errors.hpp"

namespace meltctl {

namespace pt = boost::property_tree;

std::string to_string(Benchmark b) {
  switch (b) {
    case Benchmark::Example1: return "example1";
    case Benchmark::Example2: return "example2";
    case Benchmark::Rest: return "rest";
    case Benchmark::File: return "file";
  }
  return "?";
}

namespace {

const std::map<std::string, std::set<std::string>>& allowed_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"mesh", {"dimension", "extents", "cells"}},
      {"time", {"tau", "steps"}},
      {"physics", {"kappa", "velocity"}},
      {"control", {"nu", "benchmark"}},
      {"schedule", {"gamma0", "growth", "count", "epsilon_rule"}},
      {"output", {"dir", "write_fields_every"}},
  };
  return keys;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream ss(s);
  std::vector<std::string> out;
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

class Reader {
 public:
  Reader(const pt::ptree& tree, std::string source) : tree_(tree), source_(std::move(source)) {}

  bool has(const std::string& key) const { return tree_.get_optional<std::string>(pt::ptree::path_type(key, '.')).has_value(); }

  std::string text(const std::string& key) const {
    return trim(tree_.get<std::string>(pt::ptree::path_type(key, '.')));
  }

  double number(const std::string& key) const {
    const std::string s = text(key);
    try {
      std::size_t pos = 0;
      const double v = std::stod(s, &pos);
      if (pos != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      fail(key, "expected a number, got '" + s + "'");
    }
  }

  int integer(const std::string& key) const {
    const std::string s = text(key);
    try {
      std::size_t pos = 0;
      const long v = std::stol(s, &pos);
      if (pos != s.size()) throw std::invalid_argument(s);
      return static_cast<int>(v);
    } catch (const std::exception&) {
      fail(key, "expected an integer, got '" + s + "'");
    }
  }

  [[noreturn]] void fail(const std::string& key, const std::string& why) const {
    throw ConfigError(source_ + ": [" + key.substr(0, key.find('.')) + "] " + key.substr(key.find('.') + 1) +
                      ": " + why);
  }

 private:
  const pt::ptree& tree_;
  std::string source_;
};

EpsilonRule parse_epsilon_rule(const std::string& s, const Reader& r) {
  static const std::regex re(R"(^\s*1\s*/\s*\(\s*([0-9eE+\-.]+)\s*\+\s*gamma\s*\^\s*([0-9eE+\-.]+)\s*\)\s*$)");
  std::smatch m;
  if (!std::regex_match(s, m, re)) r.fail("schedule.epsilon_rule", "expected the form 1/(a+gamma^b), got '" + s + "'");
  EpsilonRule rule;
  try {
    rule.offset = std::stod(m[1].str());
    rule.power = std::stod(m[2].str());
  } catch (const std::exception&) {
    r.fail("schedule.epsilon_rule", "malformed numbers in '" + s + "'");
  }
  if (!(rule.offset >= 0.0) || !(rule.power > 0.0)) {
    r.fail("schedule.epsilon_rule", "need a >= 0 and b > 0");
  }
  return rule;
}

}  // namespace

void SimulationConfig::validate() const {
  if (mesh.dimension != 1 && mesh.dimension != 2) throw ConfigError("mesh dimension must be 1 or 2");
  for (int a = 0; a < mesh.dimension; ++a) {
    if (!(mesh.extents[a] > 0.0)) throw ConfigError("mesh extents must be positive");
    if (mesh.cells[a] < 2) throw ConfigError("mesh needs at least 2 cells per axis");
  }
  if (!(tau > 0.0)) throw ConfigError("time step tau must be positive");
  if (steps < 1) throw ConfigError("steps must be at least 1");
  if (!(kappa > 0.0)) throw ConfigError("kappa must be positive");
  if (!(nu > 0.0)) throw ConfigError("nu must be positive");
  if (!(xi0 >= 0.0 && xi0 <= 1.0)) throw ConfigError("initial solid fraction must lie in [0,1]");
  if (benchmark == Benchmark::Example2 && mesh.dimension != 2) throw ConfigError("example2 needs a 2D mesh");
  if (benchmark == Benchmark::Example1 && mesh.dimension != 1) throw ConfigError("example1 needs a 1D mesh");
  if (benchmark == Benchmark::File && benchmark_file.empty()) throw ConfigError("file benchmark needs a path");
  if (write_fields_every < 0) throw ConfigError("write_fields_every must be non-negative");
  try {
    schedule();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
}

SimulationConfig parse_config(const std::string& text, const std::string& source) {
  // Boost's ini reader only knows ';' comments.
  std::ostringstream cleaned;
  {
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
      const std::string t = trim(line);
      if (!t.empty() && t[0] == '#') {
        cleaned << '\n';
      } else {
        cleaned << line << '\n';
      }
    }
  }
  pt::ptree tree;
  try {
    std::istringstream in(cleaned.str());
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(source + ": line " + std::to_string(e.line()) + ": " + e.message());
  }

  for (const auto& [section, body] : tree) {
    auto it = allowed_keys().find(section);
    if (it == allowed_keys().end()) throw ConfigError(source + ": unknown section [" + section + "]");
    if (!body.data().empty() && body.empty()) {
      throw ConfigError(source + ": key '" + section + "' outside of a section");
    }
    for (const auto& [key, value] : body) {
      if (!it->second.count(key)) throw ConfigError(source + ": unknown key '" + key + "' in [" + section + "]");
    }
  }

  const Reader r(tree, source);
  for (const char* key : {"mesh.dimension", "mesh.extents", "mesh.cells", "time.tau", "time.steps",
                          "control.benchmark"}) {
    if (!r.has(key)) {
      const std::string k(key);
      throw ConfigError(source + ": missing required key [" + k.substr(0, k.find('.')) + "] " +
                        k.substr(k.find('.') + 1));
    }
  }

  SimulationConfig cfg;
  cfg.mesh.dimension = r.integer("mesh.dimension");
  if (cfg.mesh.dimension != 1 && cfg.mesh.dimension != 2) r.fail("mesh.dimension", "must be 1 or 2");
  {
    const auto ext = split_ws(r.text("mesh.extents"));
    const auto cells = split_ws(r.text("mesh.cells"));
    if (static_cast<int>(ext.size()) != cfg.mesh.dimension) r.fail("mesh.extents", "need one value per axis");
    if (static_cast<int>(cells.size()) != cfg.mesh.dimension) r.fail("mesh.cells", "need one value per axis");
    cfg.mesh.extents = {0.0, 0.0};
    cfg.mesh.cells = {0, 0};
    for (int a = 0; a < cfg.mesh.dimension; ++a) {
      try {
        cfg.mesh.extents[a] = std::stod(ext[a]);
        cfg.mesh.cells[a] = std::stoi(cells[a]);
      } catch (const std::exception&) {
        r.fail("mesh.extents", "malformed extents or cells");
      }
    }
  }
  cfg.tau = r.number("time.tau");
  cfg.steps = r.integer("time.steps");
  if (r.has("physics.kappa")) cfg.kappa = r.number("physics.kappa");
  if (r.has("physics.velocity")) {
    const auto tok = split_ws(r.text("physics.velocity"));
    try {
      if (!tok.empty() && tok[0] == "rotation") {
        if (tok.size() != 2) throw std::invalid_argument("rotation");
        cfg.velocity.kind = VelocitySpec::Kind::Rotation;
        cfg.velocity.omega = std::stod(tok[1]);
      } else {
        if (static_cast<int>(tok.size()) != cfg.mesh.dimension) throw std::invalid_argument("components");
        cfg.velocity.kind = VelocitySpec::Kind::Constant;
        for (std::size_t a = 0; a < tok.size(); ++a) cfg.velocity.value[a] = std::stod(tok[a]);
      }
    } catch (const std::exception&) {
      r.fail("physics.velocity", "expected one component per axis or 'rotation <omega>'");
    }
    if (cfg.velocity.kind == VelocitySpec::Kind::Rotation && cfg.mesh.dimension != 2) {
      r.fail("physics.velocity", "rotation needs a 2D mesh");
    }
  }
  if (r.has("control.nu")) cfg.nu = r.number("control.nu");
  {
    const std::string b = r.text("control.benchmark");
    if (b == "example1") {
      cfg.benchmark = Benchmark::Example1;
    } else if (b == "example2") {
      cfg.benchmark = Benchmark::Example2;
    } else if (b == "rest") {
      cfg.benchmark = Benchmark::Rest;
    } else if (b.rfind("file:", 0) == 0) {
      cfg.benchmark = Benchmark::File;
      cfg.benchmark_file = trim(b.substr(5));
    } else {
      r.fail("control.benchmark", "expected example1, example2, rest or file:<path>, got '" + b + "'");
    }
  }
  if (r.has("schedule.gamma0")) cfg.gamma0 = r.number("schedule.gamma0");
  if (r.has("schedule.growth")) cfg.growth = r.number("schedule.growth");
  if (r.has("schedule.count")) cfg.count = r.integer("schedule.count");
  if (r.has("schedule.epsilon_rule")) cfg.epsilon_rule = parse_epsilon_rule(r.text("schedule.epsilon_rule"), r);
  if (r.has("output.dir")) cfg.output_dir = r.text("output.dir");
  if (r.has("output.write_fields_every")) cfg.write_fields_every = r.integer("output.write_fields_every");

  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(source + ": " + e.what());
  }
  return cfg;
}

SimulationConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

SimulationConfig fast_variant(SimulationConfig cfg) {
  if (cfg.benchmark == Benchmark::Example1) {
    cfg.steps = std::min(cfg.steps, 100);
  } else if (cfg.benchmark == Benchmark::Example2) {
    cfg.mesh.cells = {25, 50};
  }
  return cfg;
}

SimulationConfig example1_config() {
  SimulationConfig cfg;
  cfg.mesh.dimension = 1;
  cfg.mesh.extents = {4.0, 0.0};
  cfg.mesh.cells = {400, 0};
  cfg.tau = 0.01;
  cfg.steps = 300;
  cfg.benchmark = Benchmark::Example1;
  cfg.output_dir = "output/example1";
  return cfg;
}

SimulationConfig example2_config() {
  SimulationConfig cfg;
  cfg.mesh.dimension = 2;
  cfg.mesh.extents = {2.0, 4.0};
  cfg.mesh.cells = {50, 100};
  cfg.tau = 0.1;
  cfg.steps = 15;
  cfg.velocity.value = {-0.5, 0.0};
  cfg.benchmark = Benchmark::Example2;
  cfg.output_dir = "output/example2";
  return cfg;
}

}  // namespace meltctl
