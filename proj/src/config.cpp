// SPDX-License-Identifier: Apache-2.0

#include "config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include "error.hpp"

namespace bdp {

std::vector<double> RunSettings::effective_sample_times() const {
  if (!sample_times.empty()) return sample_times;
  std::vector<double> out;
  for (int i = 0; i <= 10; ++i) out.push_back(horizon * i / 10.0);
  return out;
}

namespace {

class Parser {
 public:
  explicit Parser(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const YAML::Node& node, const std::string& field,
                         const std::string& message) const {
    const int line = node.IsDefined() ? node.Mark().line + 1 : 0;
    if (line > 0) {
      throw ConfigError(
          fmt::format("{}:{}: {}: {}", source_, line, field, message));
    }
    throw ConfigError(fmt::format("{}: {}: {}", source_, field, message));
  }

  void check_keys(const YAML::Node& map, const std::string& field,
                  std::initializer_list<const char*> allowed) const {
    if (!map.IsMap()) fail(map, field, "expected a mapping");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& kv : map) {
      const auto key = kv.first.as<std::string>();
      if (!ok.contains(key)) {
        fail(kv.first, join(field, key), "unknown key");
      }
    }
  }

  YAML::Node require(const YAML::Node& map, const std::string& field,
                     const char* key) const {
    const YAML::Node n = map[key];
    if (!n.IsDefined() || n.IsNull()) {
      fail(map, join(field, key), "required field is missing");
    }
    return n;
  }

  template <class T>
  T scalar(const YAML::Node& node, const std::string& field) const {
    if (!node.IsScalar()) fail(node, field, "expected a scalar");
    try {
      return node.as<T>();
    } catch (const YAML::Exception&) {
      fail(node, field, fmt::format("cannot read '{}' as a {}", node.Scalar(),
                                    type_name<T>()));
    }
  }

  double number(const YAML::Node& node, const std::string& field) const {
    const auto v = scalar<double>(node, field);
    if (!std::isfinite(v)) fail(node, field, "must be finite");
    return v;
  }

  std::vector<double> numbers(const YAML::Node& node,
                              const std::string& field) const {
    if (!node.IsSequence()) fail(node, field, "expected a list of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < node.size(); ++i) {
      out.push_back(number(node[i], fmt::format("{}[{}]", field, i)));
    }
    return out;
  }

  std::vector<int> integers(const YAML::Node& node,
                            const std::string& field) const {
    if (!node.IsSequence()) fail(node, field, "expected a list of integers");
    std::vector<int> out;
    for (std::size_t i = 0; i < node.size(); ++i) {
      out.push_back(scalar<int>(node[i], fmt::format("{}[{}]", field, i)));
    }
    return out;
  }

  RateRule rule(const YAML::Node& node, const std::string& field,
                std::size_t dimension) const {
    check_keys(node, field, {"kind", "params", "period", "axis", "knots", "values"});
    const auto kind = scalar<std::string>(require(node, field, "kind"),
                                          join(field, "kind"));
    auto params = [&] {
      return numbers(require(node, field, "params"), join(field, "params"));
    };
    RateRule r;
    if (kind == "constant") {
      const auto p = params();
      if (p.size() != 1) fail(node["params"], join(field, "params"), "constant takes [c]");
      r = RateRule::constant(p[0]);
    } else if (kind == "periodic") {
      const auto p = params();
      if (p.size() != 2 && p.size() != 3) {
        fail(node["params"], join(field, "params"),
             "periodic takes [base, amplitude] or [base, amplitude, phase]");
      }
      const double period = number(require(node, field, "period"), join(field, "period"));
      r = RateRule::periodic(p[0], p[1], period, p.size() == 3 ? p[2] : 0.0);
    } else if (kind == "state_affine") {
      r = RateRule::state_affine(params());
    } else if (kind == "state_affine_capped") {
      auto p = params();
      if (p.empty()) fail(node["params"], join(field, "params"), "missing cap");
      const double cap = p.back();
      p.pop_back();
      r = RateRule::state_affine_capped(std::move(p), cap);
    } else if (kind == "table") {
      const std::string axis =
          node["axis"] ? scalar<std::string>(node["axis"], join(field, "axis"))
                       : std::string("time");
      auto values = numbers(require(node, field, "values"), join(field, "values"));
      if (axis == "time") {
        auto knots = numbers(require(node, field, "knots"), join(field, "knots"));
        const double period =
            node["period"] ? number(node["period"], join(field, "period")) : 0.0;
        r = RateRule::time_table(std::move(knots), std::move(values), period);
      } else if (axis == "count") {
        r = RateRule::count_table(std::move(values));
      } else {
        fail(node["axis"], join(field, "axis"), "axis must be 'time' or 'count'");
      }
    } else {
      fail(node["kind"], join(field, "kind"),
           fmt::format("unknown rule kind '{}' (expected constant, periodic, "
                       "state_affine, state_affine_capped or table)",
                       kind));
    }
    try {
      r.validate(dimension);
    } catch (const ConfigError& e) {
      fail(node, field, e.what());
    }
    return r;
  }

  RateBounds bounds(const YAML::Node& node, const std::string& field) const {
    check_keys(node, field, {"birth_lo", "birth_hi", "death_lo", "death_hi"});
    RateBounds b;
    b.birth_lo = number(require(node, field, "birth_lo"), join(field, "birth_lo"));
    b.birth_hi = number(require(node, field, "birth_hi"), join(field, "birth_hi"));
    b.death_lo = number(require(node, field, "death_lo"), join(field, "death_lo"));
    b.death_hi = number(require(node, field, "death_hi"), join(field, "death_hi"));
    try {
      b.validate();
    } catch (const ConfigError& e) {
      fail(node, field, e.what());
    }
    return b;
  }

  static std::string join(const std::string& field, const std::string& key) {
    return field.empty() ? key : field + "." + key;
  }

 private:
  template <class T>
  static const char* type_name() {
    if constexpr (std::is_same_v<T, double>) return "number";
    else if constexpr (std::is_integral_v<T>) return "integer";
    else return "string";
  }

  std::string source_;
};

}  // namespace

ModelConfig parse_config(const std::string& text, const std::string& source) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(fmt::format("{}:{}: syntax error: {}", source,
                                  e.mark.line + 1, e.msg));
  }
  Parser ps(source);
  if (!root.IsMap()) ps.fail(root, "<root>", "expected a mapping at top level");
  ps.check_keys(root, "",
                {"dimension", "caps", "initial", "horizon", "grid_step",
                 "tail_threshold", "slack", "seed", "paths", "sample_times",
                 "global_birth_cap", "global_death_cap", "types"});

  const YAML::Node dim_node = ps.require(root, "", "dimension");
  const int dimension = ps.scalar<int>(dim_node, "dimension");
  if (dimension < 1) ps.fail(dim_node, "dimension", "must be >= 1");
  const auto d = static_cast<std::size_t>(dimension);

  const YAML::Node caps_node = ps.require(root, "", "caps");
  std::vector<int> caps = ps.integers(caps_node, "caps");
  if (caps.size() != d) {
    ps.fail(caps_node, "caps", fmt::format("expected {} entries", d));
  }
  for (std::size_t j = 0; j < d; ++j) {
    if (caps[j] < 1) {
      ps.fail(caps_node[j], fmt::format("caps[{}]", j), "cap must be >= 1");
    }
  }

  std::vector<int> initial(d, 0);
  if (const YAML::Node n = root["initial"]; n) {
    initial = ps.integers(n, "initial");
    if (initial.size() != d) {
      ps.fail(n, "initial", fmt::format("expected {} entries", d));
    }
    for (std::size_t j = 0; j < d; ++j) {
      if (initial[j] < 0 || initial[j] > caps[j]) {
        ps.fail(n[j], fmt::format("initial[{}]", j),
                fmt::format("must lie in [0, {}]", caps[j]));
      }
    }
  }

  RunSettings settings;
  auto positive = [&](const char* key, double& target) {
    if (const YAML::Node n = root[key]; n) {
      target = ps.number(n, key);
      if (!(target > 0.0)) ps.fail(n, key, "must be positive");
    }
  };
  positive("horizon", settings.horizon);
  positive("grid_step", settings.grid_step);
  positive("tail_threshold", settings.tail_threshold);
  if (const YAML::Node n = root["slack"]; n) {
    settings.slack = ps.number(n, "slack");
    if (settings.slack < 0.0) ps.fail(n, "slack", "must be >= 0");
  }
  if (const YAML::Node n = root["seed"]; n) {
    settings.seed = ps.scalar<std::uint64_t>(n, "seed");
  }
  if (const YAML::Node n = root["paths"]; n) {
    settings.paths = ps.scalar<std::uint64_t>(n, "paths");
    if (settings.paths == 0) ps.fail(n, "paths", "must be >= 1");
  }
  if (const YAML::Node n = root["sample_times"]; n) {
    settings.sample_times = ps.numbers(n, "sample_times");
    for (std::size_t i = 0; i < settings.sample_times.size(); ++i) {
      const double s = settings.sample_times[i];
      if (s < 0.0 || s > settings.horizon ||
          (i > 0 && !(s > settings.sample_times[i - 1]))) {
        ps.fail(n[i], fmt::format("sample_times[{}]", i),
                "sample times must increase within [0, horizon]");
      }
    }
  }

  const YAML::Node types_node = ps.require(root, "", "types");
  if (!types_node.IsSequence() || types_node.size() != d) {
    ps.fail(types_node, "types",
            fmt::format("expected a list of {} type entries", d));
  }
  std::vector<TypeSpec> types;
  for (std::size_t j = 0; j < d; ++j) {
    const std::string field = fmt::format("types[{}]", j);
    const YAML::Node t = types_node[j];
    ps.check_keys(t, field, {"birth", "death", "bounds"});
    TypeSpec spec{
        ps.rule(ps.require(t, field, "birth"), field + ".birth", d),
        ps.rule(ps.require(t, field, "death"), field + ".death", d),
        ps.bounds(ps.require(t, field, "bounds"), field + ".bounds")};
    types.push_back(std::move(spec));
  }

  std::optional<double> birth_cap;
  std::optional<double> death_cap;
  if (const YAML::Node n = root["global_birth_cap"]; n) {
    birth_cap = ps.number(n, "global_birth_cap");
  }
  if (const YAML::Node n = root["global_death_cap"]; n) {
    death_cap = ps.number(n, "global_death_cap");
  }

  std::optional<ModelSpec> model;
  try {
    model.emplace(std::move(types), birth_cap, death_cap);
  } catch (const ConfigError& e) {
    throw ConfigError(fmt::format("{}: {}", source, e.what()));
  }
  std::optional<TruncatedSpace> space;
  try {
    space.emplace(caps);
  } catch (const Error& e) {
    ps.fail(caps_node, "caps", e.what());
  }

  return ModelConfig{source, std::move(*model), std::move(*space),
                     MultiIndex(std::move(initial)), std::move(settings)};
}

ModelConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot read config file '{}'", path));
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path);
}

}  // namespace bdp
