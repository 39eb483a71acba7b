#pragma once

#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ensctl/cli/source_map.hpp"
#include "ensctl/ensemble.hpp"

namespace ensctl::cli {

using json = nlohmann::json;

enum class ExperimentKind { sweep_nb, spectrum, fit_assumptions, constant_deviation, target_sweep, verify_trajectory };

inline const char* kind_name(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::sweep_nb: return "sweep_nb";
    case ExperimentKind::spectrum: return "spectrum";
    case ExperimentKind::fit_assumptions: return "fit_assumptions";
    case ExperimentKind::constant_deviation: return "constant_deviation";
    case ExperimentKind::target_sweep: return "target_sweep";
    case ExperimentKind::verify_trajectory: return "verify_trajectory";
  }
  return "?";
}

/// Ensemble section. Decimal fields that feed working-precision values are
/// kept as written and converted once the precision is set.
struct EnsembleConfig {
  std::string type;             // chain | network | nonlinear_demo
  EnsembleSpec spec;            // chain and network; horizon left infinite here
  std::vector<std::size_t> targets;
  std::vector<double> y_f;
  std::vector<double> guess;    // nonlinear_demo Newton start
  std::string t_f;              // empty for the infinite horizon
};

struct ExperimentConfig {
  std::string id;
  ExperimentKind kind = ExperimentKind::sweep_nb;
  std::vector<std::size_t> N;
  std::vector<std::string> b;
  std::string target_deviation;
  std::string tolerance = "1e-16";
  std::vector<std::uint64_t> seeds;
  unsigned precision_bits = 256;
  std::vector<std::size_t> candidate_targets;
  std::size_t subset_cap = 64;
  double target_y_f = 1.0;
  std::size_t grid_intervals = 4096;
};

struct OutputConfig {
  std::string directory = "out";
  bool dump_gramians = false;
};

struct Config {
  EnsembleConfig ensemble;
  ExperimentConfig experiment;
  OutputConfig output;
  json document;  // effective configuration, overrides applied
};

/// CLI overrides applied on top of the file.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> precision_bits;
  std::optional<std::string> output_dir;
};

namespace detail {

/// Typed access to one JSON object with located error messages.
class Section {
 public:
  Section(const json& node, std::string pointer, const SourceMap& map)
      : node_(node), pointer_(std::move(pointer)), map_(map) {
    if (!node_.is_object()) fail(pointer_, "expected an object");
  }

  [[noreturn]] void fail(const std::string& pointer, const std::string& message) const {
    throw ValidationError("config line " + std::to_string(map_.line(pointer)) + ", field " +
                          (pointer.empty() ? "/" : pointer) + ": " + message);
  }

  [[nodiscard]] std::string at(const std::string& key) const { return pointer_ + "/" + key; }
  [[nodiscard]] bool has(const std::string& key) const { return node_.contains(key); }
  [[nodiscard]] const json& get(const std::string& key) const {
    if (!has(key)) fail(pointer_, "missing required field '" + key + "'");
    return node_.at(key);
  }
  [[nodiscard]] const SourceMap& map() const { return map_; }

  void allow_only(std::initializer_list<const char*> keys) const {
    std::set<std::string> ok(keys.begin(), keys.end());
    for (const auto& [k, v] : node_.items())
      if (!ok.count(k)) fail(at(k), "unknown field");
  }

  [[nodiscard]] std::string string(const std::string& key) const {
    const json& v = get(key);
    if (!v.is_string()) fail(at(key), "expected a string");
    return v.get<std::string>();
  }

  [[nodiscard]] double number(const std::string& key) const { return number_at(get(key), at(key)); }

  [[nodiscard]] double number_at(const json& v, const std::string& pointer) const {
    if (!v.is_number()) fail(pointer, "expected a number");
    return v.get<double>();
  }

  [[nodiscard]] std::uint64_t integer_at(const json& v, const std::string& pointer) const {
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0))
      fail(pointer, "expected a nonnegative integer");
    return v.get<std::uint64_t>();
  }

  [[nodiscard]] std::uint64_t integer(const std::string& key) const { return integer_at(get(key), at(key)); }

  [[nodiscard]] bool boolean(const std::string& key) const {
    const json& v = get(key);
    if (!v.is_boolean()) fail(at(key), "expected true or false");
    return v.get<bool>();
  }

  /// Number literal text, validated as a number.
  [[nodiscard]] std::string decimal_at(const json& v, const std::string& pointer) const {
    (void)number_at(v, pointer);
    return map_.raw_number(pointer);
  }

  [[nodiscard]] const json& array(const std::string& key) const {
    const json& v = get(key);
    if (!v.is_array()) fail(at(key), "expected an array");
    return v;
  }

  [[nodiscard]] std::vector<std::uint64_t> integers(const std::string& key) const {
    std::vector<std::uint64_t> out;
    const json& a = array(key);
    for (std::size_t i = 0; i < a.size(); ++i) out.push_back(integer_at(a[i], at(key) + "/" + std::to_string(i)));
    return out;
  }

  [[nodiscard]] std::vector<std::size_t> nodes(const std::string& key) const {
    auto v = integers(key);
    return {v.begin(), v.end()};
  }

  [[nodiscard]] std::vector<double> numbers(const std::string& key) const {
    std::vector<double> out;
    const json& a = array(key);
    for (std::size_t i = 0; i < a.size(); ++i) out.push_back(number_at(a[i], at(key) + "/" + std::to_string(i)));
    return out;
  }

  [[nodiscard]] std::vector<std::string> decimals(const std::string& key) const {
    std::vector<std::string> out;
    const json& a = array(key);
    for (std::size_t i = 0; i < a.size(); ++i) out.push_back(decimal_at(a[i], at(key) + "/" + std::to_string(i)));
    return out;
  }

 private:
  const json& node_;
  std::string pointer_;
  const SourceMap& map_;
};

/// A distribution: a bare number (delta) or {"dist": ..., parameters}.
inline WeightDistribution parse_distribution(const json& v, const std::string& pointer, const SourceMap& map) {
  if (v.is_number()) return WeightDistribution::delta(v.get<double>());
  Section s(v, pointer, map);
  const std::string kind = s.string("dist");
  auto checked = [&](auto make) {
    try {
      return make();
    } catch (const ValidationError& e) {
      s.fail(pointer, e.what());
    }
  };
  if (kind == "delta") {
    s.allow_only({"dist", "value"});
    const double value = s.number("value");
    return checked([&] { return WeightDistribution::delta(value); });
  }
  if (kind == "uniform") {
    s.allow_only({"dist", "a", "b"});
    const double lo = s.number("a"), hi = s.number("b");
    return checked([&] { return WeightDistribution::uniform(lo, hi); });
  }
  if (kind == "triangular") {
    s.allow_only({"dist", "a", "b", "c"});
    const double lo = s.number("a"), hi = s.number("b"), mode = s.number("c");
    return checked([&] { return WeightDistribution::triangular(lo, hi, mode); });
  }
  if (kind == "truncated_normal") {
    s.allow_only({"dist", "mean", "stddev", "lo", "hi"});
    const double mean = s.number("mean"), sd = s.number("stddev"), lo = s.number("lo"), hi = s.number("hi");
    return checked([&] { return WeightDistribution::truncated_normal(mean, sd, lo, hi); });
  }
  s.fail(s.at("dist"), "unknown distribution '" + kind + "'");
}

inline std::string parse_horizon(const Section& s) {
  if (!s.has("horizon")) return {};
  const json& h = s.get("horizon");
  const std::string p = s.at("horizon");
  if (h.is_string()) {
    if (h.get<std::string>() != "infinite") s.fail(p, "expected \"infinite\", a number, or {\"t_f\": number}");
    return {};
  }
  if (h.is_object()) {
    Section hs(h, p, s.map());
    hs.allow_only({"t_f"});
    const std::string raw = hs.decimal_at(hs.get("t_f"), hs.at("t_f"));
    if (!(hs.number("t_f") > 0)) hs.fail(hs.at("t_f"), "t_f must be positive");
    return raw;
  }
  const std::string raw = s.decimal_at(h, p);
  if (!(h.get<double>() > 0)) s.fail(p, "t_f must be positive");
  return raw;
}

inline EnsembleConfig parse_ensemble(const json& node, const SourceMap& map) {
  Section s(node, "/ensemble", map);
  EnsembleConfig e;
  e.type = s.string("type");
  e.t_f = parse_horizon(s);
  if (e.type == "nonlinear_demo") {
    s.allow_only({"type", "targets", "y_f", "guess", "horizon"});
    const NonlinearModel model = demo_nonlinear_model();
    e.targets = s.nodes("targets");
    try {
      ensctl::detail::check_node_set(e.targets, model.n, "targets");
    } catch (const ValidationError& err) {
      s.fail(s.at("targets"), err.what());
    }
    e.y_f = s.has("y_f") ? s.numbers("y_f") : std::vector<double>(e.targets.size(), 1.0);
    if (e.y_f.size() != e.targets.size()) s.fail(s.at("y_f"), "needs one entry per target");
    e.guess = s.has("guess") ? s.numbers("guess") : std::vector<double>(model.n, 0.5);
    if (e.guess.size() != model.n) s.fail(s.at("guess"), "needs " + std::to_string(model.n) + " entries");
    return e;
  }
  EnsembleSpec& spec = e.spec;
  if (e.type == "chain") {
    s.allow_only({"type", "n", "loop", "edge", "drivers", "targets", "y_f", "x0", "horizon"});
    spec.n = s.integer("n");
    if (spec.n < 2) s.fail(s.at("n"), "a chain needs at least 2 nodes");
    const auto loop = parse_distribution(s.get("loop"), s.at("loop"), map);
    const auto edge = parse_distribution(s.get("edge"), s.at("edge"), map);
    spec.loops.assign(spec.n, loop);
    for (std::size_t j = 0; j + 1 < spec.n; ++j) spec.edges.push_back({j, j + 1, edge});
  } else if (e.type == "network") {
    s.allow_only({"type", "n", "loops", "edges", "drivers", "targets", "y_f", "x0", "horizon"});
    spec.n = s.integer("n");
    if (spec.n < 1) s.fail(s.at("n"), "n must be positive");
    const json& loops = s.get("loops");
    if (loops.is_array()) {
      for (std::size_t i = 0; i < loops.size(); ++i)
        spec.loops.push_back(parse_distribution(loops[i], s.at("loops") + "/" + std::to_string(i), map));
      if (spec.loops.size() != spec.n) s.fail(s.at("loops"), "needs one distribution per node");
    } else {
      spec.loops.assign(spec.n, parse_distribution(loops, s.at("loops"), map));
    }
    const json& edges = s.array("edges");
    for (std::size_t i = 0; i < edges.size(); ++i) {
      Section es(edges[i], s.at("edges") + "/" + std::to_string(i), map);
      es.allow_only({"source", "target", "weight"});
      Edge edge{es.integer("source"), es.integer("target"), parse_distribution(es.get("weight"), es.at("weight"), map)};
      if (edge.source >= spec.n || edge.target >= spec.n) es.fail(es.at("source"), "edge endpoint out of range");
      if (edge.source == edge.target) es.fail(es.at("target"), "self-loops belong in 'loops'");
      spec.edges.push_back(std::move(edge));
    }
  } else {
    s.fail(s.at("type"), "unknown ensemble type '" + e.type + "' (chain, network, nonlinear_demo)");
  }
  spec.drivers = s.has("drivers") ? s.nodes("drivers") : std::vector<std::size_t>{0};
  spec.targets = s.nodes("targets");
  spec.y_f = s.has("y_f") ? s.numbers("y_f") : std::vector<double>(spec.targets.size(), 1.0);
  spec.x0 = s.has("x0") ? s.numbers("x0") : std::vector<double>(spec.n, 0.0);
  for (const char* key : {"drivers", "targets"}) {
    try {
      ensctl::detail::check_node_set(key[0] == 'd' ? spec.drivers : spec.targets, spec.n, key);
    } catch (const ValidationError& err) {
      s.fail(s.has(key) ? s.at(key) : "/ensemble", err.what());
    }
  }
  if (spec.y_f.size() != spec.targets.size()) s.fail(s.at("y_f"), "needs one entry per target");
  if (spec.x0.size() != spec.n) s.fail(s.at("x0"), "needs " + std::to_string(spec.n) + " entries");
  try {
    validate(spec);
  } catch (const ValidationError& err) {
    s.fail("/ensemble", err.what());
  }
  e.targets = spec.targets;
  e.y_f = spec.y_f;
  return e;
}

inline ExperimentKind parse_kind(const Section& s) {
  const std::string k = s.string("kind");
  for (auto kind : {ExperimentKind::sweep_nb, ExperimentKind::spectrum, ExperimentKind::fit_assumptions,
                    ExperimentKind::constant_deviation, ExperimentKind::target_sweep,
                    ExperimentKind::verify_trajectory})
    if (k == kind_name(kind)) return kind;
  s.fail(s.at("kind"), "unknown experiment kind '" + k + "'");
}

template <class T>
void require_distinct(const Section& s, const std::string& key, const std::vector<T>& v) {
  std::set<T> seen(v.begin(), v.end());
  if (seen.size() != v.size()) s.fail(s.at(key), "entries must be distinct");
}

inline ExperimentConfig parse_experiment(const json& node, const SourceMap& map, std::size_t n_nodes) {
  Section s(node, "/experiment", map);
  s.allow_only({"id", "kind", "N", "b", "target_deviation", "tolerance", "seeds", "precision_bits",
                "candidate_targets", "subset_cap", "target_y_f", "grid_intervals"});
  ExperimentConfig x;
  x.kind = parse_kind(s);
  x.id = s.has("id") ? s.string("id") : kind_name(x.kind);
  x.N = s.nodes("N");
  if (x.N.empty()) s.fail(s.at("N"), "list must be nonempty");
  for (std::size_t i = 0; i < x.N.size(); ++i)
    if (x.N[i] < 1) s.fail(s.at("N") + "/" + std::to_string(i), "N must be at least 1");
  require_distinct(s, "N", x.N);
  x.seeds = s.integers("seeds");
  if (x.seeds.empty()) s.fail(s.at("seeds"), "list must be nonempty");
  require_distinct(s, "seeds", x.seeds);
  if (s.has("b")) {
    x.b = s.decimals("b");
    const auto values = s.numbers("b");
    for (std::size_t i = 0; i < values.size(); ++i)
      if (values[i] < 0) s.fail(s.at("b") + "/" + std::to_string(i), "b must be nonnegative");
    require_distinct(s, "b", values);
  }
  const bool needs_b = x.kind == ExperimentKind::sweep_nb || x.kind == ExperimentKind::verify_trajectory;
  if (needs_b && x.b.empty()) s.fail(s.at("b"), "list must be nonempty for " + std::string(kind_name(x.kind)));
  const bool needs_target = x.kind == ExperimentKind::constant_deviation || x.kind == ExperimentKind::target_sweep;
  if (needs_target) {
    x.target_deviation = s.decimal_at(s.get("target_deviation"), s.at("target_deviation"));
    if (!(s.number("target_deviation") > 0)) s.fail(s.at("target_deviation"), "must be positive");
  } else if (s.has("target_deviation")) {
    s.fail(s.at("target_deviation"), "only used by constant_deviation and target_sweep");
  }
  if (s.has("tolerance")) {
    x.tolerance = s.decimal_at(s.get("tolerance"), s.at("tolerance"));
    if (!(s.number("tolerance") > 0)) s.fail(s.at("tolerance"), "must be positive");
  }
  if (s.has("precision_bits")) {
    const auto bits = s.integer("precision_bits");
    if (bits < 64 || bits > 1u << 20) s.fail(s.at("precision_bits"), "must lie in [64, 1048576]");
    x.precision_bits = static_cast<unsigned>(bits);
  }
  if (s.has("candidate_targets")) {
    x.candidate_targets = s.nodes("candidate_targets");
    try {
      ensctl::detail::check_node_set(x.candidate_targets, n_nodes, "candidate_targets");
    } catch (const ValidationError& err) {
      s.fail(s.at("candidate_targets"), err.what());
    }
  } else {
    for (std::size_t v = 0; v < n_nodes; ++v) x.candidate_targets.push_back(v);
  }
  if (s.has("subset_cap")) {
    x.subset_cap = s.integer("subset_cap");
    if (x.subset_cap < 1) s.fail(s.at("subset_cap"), "must be at least 1");
  }
  if (s.has("target_y_f")) x.target_y_f = s.number("target_y_f");
  if (s.has("grid_intervals")) {
    x.grid_intervals = s.integer("grid_intervals");
    if (x.grid_intervals < 8 || x.grid_intervals % 4) s.fail(s.at("grid_intervals"), "must be a multiple of 4, at least 8");
  }
  if (x.kind == ExperimentKind::fit_assumptions) {
    if (x.N.size() < 4) s.fail(s.at("N"), "fit_assumptions needs at least 4 distinct N");
    if (x.seeds.size() < 3) s.fail(s.at("seeds"), "fit_assumptions needs at least 3 seeds");
  }
  return x;
}

inline OutputConfig parse_output(const json& node, const SourceMap& map) {
  Section s(node, "/output", map);
  s.allow_only({"directory", "dump_gramians"});
  OutputConfig o;
  if (s.has("directory")) o.directory = s.string("directory");
  if (s.has("dump_gramians")) o.dump_gramians = s.boolean("dump_gramians");
  return o;
}

inline std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace detail

/// Parses and validates a configuration document.
inline Config parse_config(const std::string& text, const Overrides& over = {}) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, col] = detail::line_column(text, e.byte > 0 ? e.byte - 1 : 0);
    throw ValidationError("config line " + std::to_string(line) + ", column " + std::to_string(col) +
                          ": syntax error: " + e.what());
  }
  const SourceMap map(text);
  detail::Section root(doc, "", map);
  root.allow_only({"ensemble", "experiment", "output"});
  Config cfg;
  cfg.ensemble = detail::parse_ensemble(root.get("ensemble"), map);
  const std::size_t n_nodes = cfg.ensemble.type == "nonlinear_demo" ? demo_nonlinear_model().n : cfg.ensemble.spec.n;
  cfg.experiment = detail::parse_experiment(root.get("experiment"), map, n_nodes);
  cfg.output = root.has("output") ? detail::parse_output(root.get("output"), map) : OutputConfig{};

  if (over.seed) {
    cfg.experiment.seeds = {*over.seed};
    doc["experiment"]["seeds"] = json::array({*over.seed});
  }
  if (over.precision_bits) {
    if (*over.precision_bits < 64) throw ValidationError("--precision-bits must be at least 64");
    cfg.experiment.precision_bits = *over.precision_bits;
    doc["experiment"]["precision_bits"] = *over.precision_bits;
  }
  if (over.output_dir) {
    cfg.output.directory = *over.output_dir;
    doc["output"]["directory"] = *over.output_dir;
  }
  if (cfg.experiment.kind == ExperimentKind::fit_assumptions && cfg.experiment.seeds.size() < 3)
    throw ValidationError("fit_assumptions needs at least 3 seeds");
  cfg.document = std::move(doc);
  return cfg;
}

inline Config load_config(const std::string& path, const Overrides& over = {}) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot read config " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), over);
}

/// 64-bit FNV-1a of the canonical (key-sorted, compact) effective config.
inline std::string config_hash(const Config& cfg) {
  const std::string canon = cfg.document.dump();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : canon) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Runtime ensemble at the current working precision.
inline Horizon make_horizon(const EnsembleConfig& e) {
  return e.t_f.empty() ? Horizon::infinite() : Horizon::finite(Real(e.t_f));
}

}  // namespace ensctl::cli
