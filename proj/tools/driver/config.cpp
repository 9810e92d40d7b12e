#include "config.hpp"

#include <cmath>
#include <algorithm>
#include <fstream>
#include <numbers>

namespace fraccv::driver {

using nlohmann::json;

std::vector<std::string> command_names() { return {"ops", "verify", "envelope", "minimize", "relax", "lsc"}; }

json default_tree() {
  return json::parse(R"({
    "grid": {"kind": "truncated-box", "dim": 1, "points_per_axis": 512, "half_extent": 4.0},
    "params": {"p": 2.0},
    "backend": {"kind": "spectral", "padding": 0},
    "complementary": {"omega_radius": 1.0, "margin": 0.1, "datum": {"family": "zero"}},
    "field": {"family": "bump", "amplitude": 1.0, "centre": 0.0, "width": 0.9},
    "integrand": "pinched-nonconvex-1d",
    "output_dir": "fraccv-out",
    "seed": 0,
    "tolerances": {},
    "envelope": {"a_min": -4.0, "a_max": 4.0, "samples": 8001,
                 "sweep_min": -2.0, "sweep_max": 2.0, "sweep_samples": 41, "search_points": 0},
    "minimize": {"tolerance": 1e-6, "max_iterations": 5000},
    "relax": {"oscillations": [4, 8, 16, 32, 64], "inner_fraction": 0.8, "table_range": 4.0,
              "table_samples": 8001},
    "lsc": {"members": 16, "inner_fraction": 0.8}
  })");
}

void apply_override(json& tree, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not key=value");
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  json* node = &tree;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string part = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError("override key '" + path + "' has an empty component");
    if (!node->is_object()) throw ConfigError("override key '" + path + "' descends into a non-object");
    node = &(*node)[part];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  *node = std::move(value);
}

namespace {

template <class T>
T read(const json& tree, const std::string& section, const std::string& key) {
  const auto where = section + "." + key;
  if (!tree.contains(section) || !tree.at(section).is_object() || !tree.at(section).contains(key))
    throw ConfigError("missing required key '" + where + "'");
  try {
    return tree.at(section).at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("key '" + where + "' has the wrong type: " + tree.at(section).at(key).dump());
  }
}

double field_param(const json& spec, const char* key, double fallback, const std::string& where) {
  if (!spec.contains(key)) return fallback;
  if (!spec.at(key).is_number()) throw ConfigError("key '" + where + "." + key + "' must be a number");
  return spec.at(key).get<double>();
}

std::array<double, 3> domain_centre(const GridSpec& g) {
  const double c = g.kind == GridKind::PeriodicCell ? 0.5 : 0.0;
  return {c, c, c};
}

}  // namespace

RunConfig parse_config(const json& user, const std::vector<std::string>& overrides) {
  if (!user.is_object()) throw ConfigError("configuration must be a JSON object");
  json tree = default_tree();
  tree.merge_patch(user);
  for (const auto& o : overrides) apply_override(tree, o);

  RunConfig cfg;
  cfg.raw = tree;
  if (!tree.contains("command") || !tree.at("command").is_string())
    throw ConfigError("missing required key 'command' (one of ops, verify, envelope, minimize, relax, lsc)");
  cfg.command = tree.at("command").get<std::string>();
  const auto names = command_names();
  if (std::find(names.begin(), names.end(), cfg.command) == names.end())
    throw ConfigError("unknown command '" + cfg.command + "' (one of ops, verify, envelope, minimize, relax, lsc)");

  GridSpec g;
  g.dim = read<int>(tree, "grid", "dim");
  try {
    g.kind = grid_kind_from_string(read<std::string>(tree, "grid", "kind"));
  } catch (const Error& e) {
    throw ConfigError(std::string("key 'grid.kind': ") + e.what());
  }
  g.points_per_axis = read<int>(tree, "grid", "points_per_axis");
  if (g.kind == GridKind::TruncatedBox) g.half_extent = read<double>(tree, "grid", "half_extent");
  try {
    cfg.grid = make_grid(g);
  } catch (const Error& e) {
    throw ConfigError(std::string("section 'grid': ") + e.what());
  }

  const double alpha = read<double>(tree, "params", "alpha");
  const double p = read<double>(tree, "params", "p");
  try {
    cfg.params = compute_constants(cfg.grid.dim, alpha, p);
  } catch (const Error& e) {
    throw ConfigError(std::string("section 'params' (alpha, p): ") + e.what());
  }

  const auto kind = read<std::string>(tree, "backend", "kind");
  if (kind == "spectral") {
    cfg.backend = OperatorBackend::spectral(read<int>(tree, "backend", "padding"));
  } else if (kind == "quadrature") {
    cfg.backend = OperatorBackend::quadrature();
  } else {
    throw ConfigError("key 'backend.kind' must be spectral or quadrature, got '" + kind + "'");
  }

  if (!tree.at("integrand").is_string()) throw ConfigError("key 'integrand' must be a preset name");
  cfg.integrand = tree.at("integrand").get<std::string>();
  if (!tree.at("output_dir").is_string()) throw ConfigError("key 'output_dir' must be a path");
  cfg.output_dir = tree.at("output_dir").get<std::string>();
  if (!tree.at("seed").is_number_integer() || tree.at("seed").get<long long>() < 0)
    throw ConfigError("key 'seed' must be a non-negative integer");
  cfg.seed = tree.at("seed").get<unsigned long long>();
  if (!tree.at("tolerances").is_object()) throw ConfigError("key 'tolerances' must be an object");
  for (const auto& [k, v] : tree.at("tolerances").items())
    if (!v.is_number()) throw ConfigError("key 'tolerances." + k + "' must be a number");

  if ((cfg.command == "relax" || cfg.command == "lsc") &&
      (cfg.grid.dim != 1 || cfg.grid.kind != GridKind::TruncatedBox))
    throw ConfigError("command '" + cfg.command + "' needs a one-dimensional truncated-box grid (key 'grid')");
  if (cfg.command == "relax") {
    const auto ks = tree.at("relax").at("oscillations");
    if (!ks.is_array() || ks.empty()) throw ConfigError("key 'relax.oscillations' must be a non-empty array");
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  json user = json::parse(in, nullptr, false, true);
  if (user.is_discarded()) throw ConfigError("config file '" + path.string() + "' is not valid JSON");
  return parse_config(user, overrides);
}

double RunConfig::tolerance(const std::string& name, double fallback) const {
  const auto& t = raw.at("tolerances");
  return t.contains(name) ? t.at(name).get<double>() : fallback;
}

SampledField make_field(const json& spec, const GridSpec& grid, const std::string& where) {
  if (!spec.is_object() || !spec.contains("family") || !spec.at("family").is_string())
    throw ConfigError("key '" + where + ".family' is missing (bump, gaussian or zero)");
  const auto family = spec.at("family").get<std::string>();
  const double amp = field_param(spec, "amplitude", 1.0, where);
  const double width = field_param(spec, "width", 0.5, where);
  const auto base = domain_centre(grid);
  const double shift = field_param(spec, "centre", 0.0, where);
  if (!(width > 0.0)) throw ConfigError("key '" + where + ".width' must be positive");
  const int n = grid.dim;
  auto r2 = [=](std::span<const double> x) {
    double s = 0.0;
    for (int d = 0; d < n; ++d) {
      const double t = (x[d] - base[d] - (d == 0 ? shift : 0.0)) / width;
      s += t * t;
    }
    return s;
  };
  if (family == "zero") return SampledField(grid, 1, DecayClass::CompactSupport);
  if (family == "bump")
    return SampledField::scalar(
        grid, [=](std::span<const double> x) { const double s = r2(x); return s < 1.0 ? amp * std::exp(-1.0 / (1.0 - s)) : 0.0; },
        DecayClass::CompactSupport);
  if (family == "gaussian")
    return SampledField::scalar(
        grid, [=](std::span<const double> x) { return amp * std::exp(-std::numbers::pi * r2(x)); },
        DecayClass::SchwartzLike);
  throw ConfigError("key '" + where + ".family': unknown field family '" + family + "' (bump, gaussian, zero)");
}

ComplementarySpec make_complementary(const RunConfig& cfg) {
  const double R = cfg.get<double>("complementary", "omega_radius");
  const double margin = cfg.get<double>("complementary", "margin");
  const auto c = domain_centre(cfg.grid);
  const int n = cfg.grid.dim;
  auto omega = Mask::from_predicate(cfg.grid, [=](std::span<const double> x) {
    double s = 0.0;
    for (int d = 0; d < n; ++d) s += (x[d] - c[d]) * (x[d] - c[d]);
    return std::sqrt(s) < R;
  });
  if (omega.count() == 0) throw ConfigError("key 'complementary.omega_radius' leaves Omega empty");
  auto datum = make_field(cfg.raw.at("complementary").at("datum"), cfg.grid, "complementary.datum");
  try {
    return ComplementarySpec::with_margin(std::move(omega), std::move(datum), margin);
  } catch (const Error& e) {
    throw ConfigError(std::string("section 'complementary': ") + e.what());
  }
}

}  // namespace fraccv::driver
