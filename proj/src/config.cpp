#include "tptkit/config.hpp"

#include "tptkit/error.hpp"

#include <fmt/format.h>

#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace tptkit {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> words(const std::string& s) {
  std::istringstream is(s);
  std::vector<std::string> out;
  for (std::string w; is >> w;) out.push_back(w);
  return out;
}

double to_double(const std::string& w, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(w, &used);
    if (used != w.size()) throw std::invalid_argument(w);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(fmt::format("{}: '{}' is not a number", where, w));
  }
}

std::vector<double> numbers(const std::string& value, const std::string& where) {
  std::vector<double> out;
  for (const auto& w : words(value)) out.push_back(to_double(w, where));
  return out;
}

long to_integer(const std::string& value, const std::string& where) {
  const double v = to_double(trim(value), where);
  if (v != static_cast<double>(static_cast<long>(v)) || v < 0) {
    throw ConfigError(fmt::format("{}: expected a non-negative integer", where));
  }
  return static_cast<long>(v);
}

bool to_bool(const std::string& value, const std::string& where) {
  const std::string v = trim(value);
  if (v == "true" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "no" || v == "0") return false;
  throw ConfigError(fmt::format("{}: expected true or false", where));
}

using Setter = std::function<void(ExperimentConfig&, const std::string& value, const std::string& where)>;

const std::map<std::string, std::map<std::string, Setter>>& grammar() {
  static const std::map<std::string, std::map<std::string, Setter>> g = [] {
    std::map<std::string, std::map<std::string, Setter>> m;
    auto real = [](double ExperimentConfig::Analyze::*field) {
      return Setter([field](ExperimentConfig& c, const std::string& v, const std::string& w) {
        c.analyze.*field = to_double(trim(v), w);
      });
    };
    m["model"]["family"] = [](ExperimentConfig& c, const std::string& v, const std::string&) {
      c.model.family = trim(v);
    };
    for (const char* p : {"beta", "shear"}) {
      m["model"][p] = [p](ExperimentConfig& c, const std::string& v, const std::string& w) {
        c.model.params[p] = to_double(trim(v), w);
      };
    }
    m["model"]["box"] = [](ExperimentConfig& c, const std::string& v, const std::string& w) {
      const auto n = numbers(v, w);
      if (n.size() == 2) {
        c.model.box = Box{make_vec(n[0]), make_vec(n[1])};
      } else if (n.size() == 4) {
        c.model.box = Box{make_vec(n[0], n[2]), make_vec(n[1], n[3])};
      } else {
        throw ConfigError(w + ": box takes 'lo hi' or 'xlo xhi ylo yhi'");
      }
    };
    m["regions"]["A"] = [](ExperimentConfig& c, const std::string& v, const std::string&) {
      c.a.text = trim(v);
    };
    m["regions"]["B"] = [](ExperimentConfig& c, const std::string& v, const std::string&) {
      c.b.text = trim(v);
    };
    auto int_list = [](std::vector<int> ExperimentConfig::*field) {
      return Setter([field](ExperimentConfig& c, const std::string& v, const std::string& w) {
        (c.*field).clear();
        for (const auto& s : words(v)) (c.*field).push_back(static_cast<int>(to_integer(s, w)));
      });
    };
    m["grid"]["nodes"] = int_list(&ExperimentConfig::nodes);
    m["grid"]["histogram_nodes"] = int_list(&ExperimentConfig::histogram_nodes);

    m["simulate"]["dt"] = [](ExperimentConfig& c, const std::string& v, const std::string& w) {
      c.simulate.dt = to_double(trim(v), w);
    };
    m["simulate"]["time"] = [](ExperimentConfig& c, const std::string& v, const std::string& w) {
      c.simulate.time = to_double(trim(v), w);
    };
    m["simulate"]["n_streams"] = [](ExperimentConfig& c, const std::string& v, const std::string& w) {
      c.simulate.n_streams = static_cast<int>(to_integer(v, w));
    };
    m["simulate"]["seed"] = [](ExperimentConfig& c, const std::string& v, const std::string& w) {
      c.simulate.seed = static_cast<std::uint64_t>(to_integer(v, w));
    };
    m["simulate"]["x0"] = [](ExperimentConfig& c, const std::string& v, const std::string& w) {
      c.simulate.x0 = numbers(v, w);
    };
    m["simulate"]["refine"] = [](ExperimentConfig& c, const std::string& v, const std::string& w) {
      c.simulate.refine = to_bool(v, w);
    };

    m["tpp"]["dt_max"] = [](ExperimentConfig& c, const std::string& v, const std::string& w) {
      c.tpp.dt_max = to_double(trim(v), w);
    };
    m["tpp"]["n_paths"] = [](ExperimentConfig& c, const std::string& v, const std::string& w) {
      c.tpp.n_paths = static_cast<std::size_t>(to_integer(v, w));
    };
    m["tpp"]["c_safe"] = [](ExperimentConfig& c, const std::string& v, const std::string& w) {
      c.tpp.c_safe = to_double(trim(v), w);
    };
    m["tpp"]["start"] = [](ExperimentConfig& c, const std::string& v, const std::string& w) {
      c.tpp.start = numbers(v, w);
    };

    m["analyze"]["surfaces"] = [](ExperimentConfig& c, const std::string& v, const std::string& w) {
      c.analyze.surfaces = numbers(v, w);
    };
    m["analyze"]["mc_probes"] = [](ExperimentConfig& c, const std::string& v, const std::string& w) {
      c.analyze.mc_probes = numbers(v, w);
    };
    m["analyze"]["mc_samples"] = [](ExperimentConfig& c, const std::string& v, const std::string& w) {
      c.analyze.mc_samples = static_cast<std::size_t>(to_integer(v, w));
    };
    m["analyze"]["mc_dt"] = [](ExperimentConfig& c, const std::string& v, const std::string& w) {
      c.analyze.mc_dt = numbers(v, w);
    };
    using A = ExperimentConfig::Analyze;
    m["analyze"]["rate_tolerance"] = real(&A::rate_tolerance);
    m["analyze"]["identity_tolerance"] = real(&A::identity_tolerance);
    m["analyze"]["time_tolerance"] = real(&A::time_tolerance);
    m["analyze"]["density_tolerance"] = real(&A::density_tolerance);
    m["analyze"]["weak_tolerance"] = real(&A::weak_tolerance);
    m["analyze"]["flux_tolerance"] = real(&A::flux_tolerance);
    m["analyze"]["flux_rate_tolerance"] = real(&A::flux_rate_tolerance);
    m["analyze"]["pointwise_tolerance"] = real(&A::pointwise_tolerance);
    m["analyze"]["divergence_tolerance"] = real(&A::divergence_tolerance);
    m["analyze"]["sigma"] = real(&A::sigma);
    m["analyze"]["ks_alpha"] = real(&A::ks_alpha);
    m["analyze"]["reciprocal_tolerance"] = real(&A::reciprocal_tolerance);

    m["output"]["directory"] = [](ExperimentConfig& c, const std::string& v, const std::string&) {
      c.output.directory = trim(v);
    };
    m["output"]["format"] = [](ExperimentConfig& c, const std::string& v, const std::string& w) {
      const std::string f = trim(v);
      if (f != "csv" && f != "json" && f != "binary") {
        throw ConfigError(w + ": format must be csv, json or binary");
      }
      c.output.format = f;
    };
    m["output"]["trajectories"] = [](ExperimentConfig& c, const std::string& v, const std::string& w) {
      c.output.trajectories = to_bool(v, w);
    };
    return m;
  }();
  return g;
}

void check_point(const std::optional<std::vector<double>>& p, int dim, const char* what) {
  if (p && static_cast<int>(p->size()) != dim) {
    throw ConfigError(fmt::format("{} needs {} coordinate(s)", what, dim));
  }
}

}  // namespace

Region RegionSpec::build() const {
  const auto w = words(text);
  if (w.empty()) throw ConfigError("empty region definition");
  std::vector<double> v;
  for (std::size_t i = 1; i < w.size(); ++i) v.push_back(to_double(w[i], "region '" + text + "'"));
  if (w[0] == "interval") {
    if (v.size() != 2 || !(v[0] < v[1])) throw ConfigError("interval needs 'lo hi' with lo < hi");
    return Region::interval(v[0], v[1]);
  }
  if (w[0] == "ball") {
    if (v.size() != 3 && v.size() != 4) throw ConfigError("ball needs 'cx cy r [n_atoms]'");
    if (!(v[2] > 0)) throw ConfigError("ball radius must be positive");
    const int n = v.size() == 4 ? static_cast<int>(v[3]) : 256;
    return Region::ball(make_vec(v[0], v[1]), v[2], n);
  }
  throw ConfigError("unknown region shape '" + w[0] + "' (interval or ball)");
}

int ExperimentConfig::dim() const {
  return model.family == "doublewell2d" || model.family == "shear2d" ? 2 : 1;
}

ExperimentConfig parse_config(std::istream& is) {
  ExperimentConfig c;
  std::string section, line;
  std::set<std::string> seen_sections;
  std::set<std::string> seen;
  std::ostringstream src;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    src << line << '\n';
    const auto hash = line.find('#');
    const std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (body.empty()) continue;
    const std::string where = fmt::format("line {}", lineno);
    if (body.front() == '[') {
      if (body.back() != ']') throw ConfigError(where + ": malformed section header");
      section = trim(body.substr(1, body.size() - 2));
      if (!grammar().count(section)) throw ConfigError(where + ": unknown section [" + section + "]");
      seen_sections.insert(section);
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
    if (section.empty()) throw ConfigError(where + ": key outside of a section");
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    const auto& keys = grammar().at(section);
    const auto it = keys.find(key);
    if (it == keys.end()) {
      throw ConfigError(fmt::format("{}: unknown key '{}' in section [{}]", where, key, section));
    }
    if (!seen.insert(section + "." + key).second) {
      throw ConfigError(fmt::format("{}: duplicate key '{}' in section [{}]", where, key, section));
    }
    if (value.empty()) throw ConfigError(fmt::format("{}: key '{}' has no value", where, key));
    it->second(c, value, where + " (" + key + ")");
  }
  c.source = src.str();
  c.hash = fnv1a(c.source);

  if (c.model.family.empty()) throw ConfigError("[model] family is required");
  if (c.a.text.empty() || c.b.text.empty()) throw ConfigError("[regions] needs both A and B");
  if (c.nodes.empty()) throw ConfigError("[grid] nodes is required");
  c.simulate.enabled = seen_sections.count("simulate") && c.simulate.time > 0.0;
  c.tpp.enabled = seen_sections.count("tpp") > 0;

  const int d = c.dim();
  if (static_cast<int>(c.nodes.size()) != d) {
    throw ConfigError(fmt::format("[grid] nodes needs {} value(s) for this model", d));
  }
  if (c.histogram_nodes.empty()) c.histogram_nodes.assign(d, 65);
  if (static_cast<int>(c.histogram_nodes.size()) != d) {
    throw ConfigError(fmt::format("[grid] histogram_nodes needs {} value(s)", d));
  }
  check_point(c.simulate.x0, d, "[simulate] x0");
  check_point(c.tpp.start, d, "[tpp] start");
  if (c.analyze.mc_probes.size() % static_cast<std::size_t>(d) != 0) {
    throw ConfigError("[analyze] mc_probes must list whole points");
  }
  if (c.simulate.enabled && (!(c.simulate.dt > 0.0) || c.simulate.n_streams < 1)) {
    throw ConfigError("[simulate] needs dt > 0 and n_streams >= 1");
  }
  if (c.tpp.enabled && !(c.tpp.dt_max > 0.0)) throw ConfigError("[tpp] dt_max must be positive");
  if (c.tpp.enabled && !c.tpp.start && c.tpp.n_paths < 100) {
    throw ConfigError("[tpp] ensembles need n_paths >= 100");
  }

  const Region a = c.a.build(), b = c.b.build();
  if (a.dim() != d || b.dim() != d) throw ConfigError("region dimension does not match the model");
  check_disjoint(a, b);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file " + path);
  return parse_config(f);
}

}  // namespace tptkit
