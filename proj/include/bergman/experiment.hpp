#pragma once

// Experiment harness: TOML configs, runners for each experiment kind, and
// deterministic report rendering.

#include "bergman/io.hpp"

#include <toml.hpp>

#include <filesystem>
#include <set>

namespace bergman {

// ---------------------------------------------------------------------------
// Reports

struct Check {
  std::string name;
  double value = 0.0;
  double error = 0.0;  // estimated error of value (standard error or rigorous bound)
  double tolerance = 0.0;
  std::string comparison;  // how value is compared against tolerance
  bool pass = false;
};

struct Report {
  std::string experiment;
  std::string name;
  std::uint64_t seed = 0;
  Json inputs = Json::object();
  std::vector<Check> checks;
  Json data = Json::object();
  std::optional<std::pair<std::string, std::string>> error;  // (code, message)

  bool empty() const { return experiment.empty() && checks.empty() && !error; }
  bool pass() const {
    return !error && std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
  }
};

inline Check check_below(std::string name, double value, double tol, double error = 0.0) {
  return {std::move(name), value, error, tol, "<", value < tol};
}
inline Check check_above(std::string name, double value, double tol, double error = 0.0) {
  return {std::move(name), value, error, tol, ">", value > tol};
}
inline Check check_equal(std::string name, double value, double expected) {
  return {std::move(name), value, 0.0, expected, "==", value == expected};
}

inline Json number_or_text(double v) {
  if (std::isfinite(v)) return v;
  return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
}

inline Json to_json(const Check& c) {
  return {{"name", c.name},
          {"value", number_or_text(c.value)},
          {"error", number_or_text(c.error)},
          {"tolerance", number_or_text(c.tolerance)},
          {"comparison", c.comparison},
          {"pass", c.pass}};
}

inline Json to_json(const Report& r) {
  if (r.empty()) return Json::object();
  Json checks = Json::array();
  for (const auto& c : r.checks) checks.push_back(to_json(c));
  Json j = {{"experiment", r.experiment},
            {"name", r.name},
            {"seed", r.seed},
            {"inputs", r.inputs},
            {"checks", std::move(checks)},
            {"data", r.data},
            {"verdict", r.pass() ? "pass" : "fail"}};
  if (r.error) j["error"] = {{"code", r.error->first}, {"message", r.error->second}};
  return j;
}

enum class ReportFormat { json, csv, human };

inline ReportFormat parse_format(const std::string& s) {
  if (s == "json") return ReportFormat::json;
  if (s == "csv") return ReportFormat::csv;
  if (s == "human") return ReportFormat::human;
  fail(ErrorCode::invalid_argument, "unknown report format " + s);
}

inline std::string csv_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Census reports render one CSV row per weight; all others one row per check.
inline std::string report_render(const Report& r, ReportFormat f) {
  switch (f) {
    case ReportFormat::json: return canonical_json(to_json(r));
    case ReportFormat::csv: {
      if (r.experiment == "census" && r.data.contains("cases")) {
        std::string out = "case,degree,rows,cols,multiplicity,members\n";
        std::size_t i = 0;
        for (const auto& c : r.data["cases"]) {
          for (const auto& w : c.at("census").at("classes")) {
            auto vec = [](const Json& v) {
              std::string s;
              for (std::size_t k = 0; k < v.size(); ++k) s += (k ? " " : "") + std::to_string(v[k].get<int>());
              return s;
            };
            std::string members;
            for (const auto& a : w.at("members")) {
              members += members.empty() ? "" : "|";
              members += multi_index_text(multi_index_from_json(a));
            }
            out += std::to_string(i) + "," + std::to_string(w.at("degree").get<int>()) + "," +
                   vec(w.at("weight").at("rows")) + "," + vec(w.at("weight").at("cols")) + "," +
                   std::to_string(w.at("multiplicity").get<int>()) + "," + members + "\n";
          }
          ++i;
        }
        return out;
      }
      std::string out = "name,value,error,tolerance,comparison,pass\n";
      for (const auto& c : r.checks)
        out += c.name + "," + csv_number(c.value) + "," + csv_number(c.error) + "," + csv_number(c.tolerance) + "," +
               c.comparison + "," + (c.pass ? "true" : "false") + "\n";
      return out;
    }
    case ReportFormat::human: {
      if (r.empty()) return "";
      std::ostringstream os;
      os.precision(6);
      os << r.experiment << " '" << r.name << "' seed " << r.seed << "\n";
      for (const auto& c : r.checks)
        os << (c.pass ? "  PASS " : "  FAIL ") << c.name << ": " << c.value << " " << c.comparison << " " << c.tolerance
           << " (error " << c.error << ")\n";
      if (r.error) os << "  ERROR " << r.error->first << ": " << r.error->second << "\n";
      os << "verdict: " << (r.pass() ? "pass" : "fail") << "\n";
      return os.str();
    }
  }
  return "";
}

/// 0 when every verdict passes, 1 otherwise.
inline int exit_code(const Report& r) { return r.pass() ? 0 : 1; }

// ---------------------------------------------------------------------------
// Config loading

namespace detail {

inline Json toml_to_json(const toml::node& node) {
  if (auto t = node.as_table()) {
    Json j = Json::object();
    for (const auto& [k, v] : *t) j[std::string(k.str())] = toml_to_json(v);
    return j;
  }
  if (auto a = node.as_array()) {
    Json j = Json::array();
    for (const auto& v : *a) j.push_back(toml_to_json(v));
    return j;
  }
  if (auto v = node.as_integer()) return v->get();
  if (auto v = node.as_floating_point()) return v->get();
  if (auto v = node.as_boolean()) return v->get();
  if (auto v = node.as_string()) return v->get();
  fail(ErrorCode::config, "unsupported TOML value type (dates and times are not accepted)");
}

}  // namespace detail

inline Json parse_config_text(std::string_view text, const std::string& source = "config") {
  try {
    return detail::toml_to_json(toml::parse(text, source));
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << source << ": " << e.description() << " at line " << e.source().begin.line;
    fail(ErrorCode::config, os.str());
  }
}

inline Json load_config_file(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::config, "cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path);
}

// ---------------------------------------------------------------------------
// Config model

namespace cfg {

[[noreturn]] inline void bad(const std::string& what) { fail(ErrorCode::config, what); }

template <class T>
T need(const Json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) bad(where + ": missing '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception&) {
    bad(where + ": '" + key + "' has the wrong type");
  }
}

template <class T>
T get(const Json& j, const char* key, T fallback, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  return need<T>(j, key, where);
}

inline Domain domain(const Json& j, const std::string& where) {
  const auto kind = need<std::string>(j, "kind", where + ".domain");
  try {
    if (kind == "disk") return Domain::unit_ball(1);
    if (kind == "ball") return Domain::unit_ball(need<int>(j, "n", where + ".domain"));
    if (kind == "matrix_ball") return Domain::matrix_ball(need<int>(j, "n", where + ".domain"), need<int>(j, "m", where + ".domain"));
  } catch (const Error& e) {
    bad(where + ".domain: " + e.what());
  }
  bad(where + ".domain: unknown kind '" + kind + "' (disk, ball, matrix_ball)");
}

inline Profile profile_stage(const Json& j, const std::string& where) {
  const auto name = need<std::string>(j, "profile", where);
  const auto p = get<std::vector<double>>(j, "params", {}, where);
  auto arg = [&](std::size_t i, double fallback) { return i < p.size() ? p[i] : fallback; };
  try {
    if (name == "identity") return Profile::identity();
    if (name == "power") return Profile::power(static_cast<int>(arg(0, 1)));
    if (name == "exp") return Profile::exponential(arg(0, -1));
    if (name == "sin") return Profile::sine(arg(0, 1));
    if (name == "cos") return Profile::cosine(arg(0, 1));
    if (name == "tanh") return Profile::hyperbolic_tangent(arg(0, 1));
    if (name == "atan") return Profile::arctangent(arg(0, 1));
    if (name == "poly") return Profile::polynomial(p);
    if (name == "gauss") return Profile::gaussian(arg(0, 0), arg(1, 1));
  } catch (const Error& e) {
    bad(where + ": " + e.what());
  }
  bad(where + ": unknown profile '" + name + "'");
}

/// A profile is either {profile, params} or a list of stages applied
/// right to left (the last stage acts first).
inline Profile profile(const Json& j, const std::string& where) {
  if (j.contains("compose")) {
    const auto& stages = j["compose"];
    if (!stages.is_array() || stages.empty()) bad(where + ": 'compose' must be a nonempty list");
    Profile out = profile_stage(stages.back(), where);
    for (std::size_t i = stages.size() - 1; i-- > 0;) out = Profile::compose(profile_stage(stages[i], where), out);
    return out;
  }
  return profile_stage(j, where);
}

inline BoundingMap bounding(const Json& j, const std::string& where) {
  const auto b = get<std::string>(j, "bounding", "arctan", where);
  if (b == "arctan") return BoundingMap::arctan;
  if (b == "none") return BoundingMap::none;
  bad(where + ": unknown bounding map '" + b + "'");
}

inline Symbol symbol(const Json& j, const Domain& d, const std::string& where) {
  const auto family = need<std::string>(j, "family", where);
  Symbol s = [&]() -> Symbol {
    if (family == "radial") return Symbol::radial(profile(j, where));
    if (family == "k_invariant") {
      const auto st = get<std::string>(j, "statistic", "trace1", where);
      if (st != "trace1" && st != "trace2") bad(where + ": statistic must be trace1 or trace2");
      return Symbol::k_invariant(st == "trace1" ? KStatistic::trace1 : KStatistic::trace2, profile(j, where));
    }
    if (family == "torus") {
      std::vector<TorusTerm> terms;
      for (const auto& t : need<Json>(j, "terms", where)) {
        TorusTerm term;
        term.coeff = get<double>(t, "coeff", 1.0, where);
        term.abs2 = get<std::vector<int>>(t, "abs2", {}, where);
        term.re_power = get<int>(t, "re", 0, where);
        term.im_power = get<int>(t, "im", 0, where);
        terms.push_back(std::move(term));
      }
      return Symbol::torus_invariant(std::move(terms));
    }
    if (family == "hyperbolic") return Symbol::hyperbolic(profile(j, where));
    if (family == "parabolic") return Symbol::parabolic(profile(j, where), bounding(j, where));
    if (family == "real_form") return Symbol::real_form(profile(j, where), bounding(j, where));
    if (family == "coordinate") {
      const auto part = get<std::string>(j, "part", "re", where);
      if (part != "re" && part != "im") bad(where + ": part must be re or im");
      return Symbol::coordinate(get<int>(j, "row", 0, where), get<int>(j, "col", 0, where), part == "im");
    }
    if (family == "sum") {
      const auto& terms = need<Json>(j, "terms", where);
      if (!terms.is_array() || terms.empty()) bad(where + ": sum needs terms");
      std::optional<Symbol> acc;
      double acc_coeff = 1.0;
      for (const auto& t : terms) {
        const double c = get<double>(t, "coeff", 1.0, where);
        Symbol term = symbol(need<Json>(t, "symbol", where), d, where + ".terms");
        if (!acc) {
          acc = term;
          acc_coeff = c;
        } else {
          acc = linear_combination(*acc, acc_coeff, term, c, d);
          acc_coeff = 1.0;
        }
      }
      if (acc_coeff != 1.0) acc = linear_combination(*acc, acc_coeff, *acc, 0.0, d);
      return *acc;
    }
    bad(where + ": unknown symbol family '" + family + "'");
  }();
  try {
    s.check_domain(d);
  } catch (const Error& e) {
    bad(where + ": " + e.what());
  }
  if (family == "coordinate") {
    const int r = get<int>(j, "row", 0, where);
    const int c = get<int>(j, "col", 0, where);
    if (r < 0 || c < 0 || r >= d.rows() || c >= d.cols()) bad(where + ": coordinate out of range");
  }
  return s;
}

struct RuleSpec {
  std::string kind = "radial";
  int k_max = 0;  // 0 = resolution + 8
  int radial_nodes = 0;
  int angular_points = 0;
  std::size_t samples = 0;
};

inline RuleSpec rule(const Json& j, const Domain& d, const std::string& where) {
  RuleSpec r;
  r.kind = get<std::string>(j, "kind", d.is_ball() ? "radial" : "monte_carlo", where + ".rule");
  if (r.kind == "radial") {
    if (!d.is_ball()) bad(where + ".rule: radial rules need a rank-one domain");
    r.k_max = get<int>(j, "k_max", 0, where);
    r.radial_nodes = get<int>(j, "radial_nodes", 0, where);
    r.angular_points = get<int>(j, "angular_points", 0, where);
  } else if (r.kind == "monte_carlo") {
    const auto s = get<std::int64_t>(j, "samples", 0, where + ".rule");
    if (s <= 0) bad(where + ".rule: monte_carlo needs samples > 0");
    r.samples = static_cast<std::size_t>(s);
  } else {
    bad(where + ".rule: unknown kind '" + r.kind + "' (radial, monte_carlo)");
  }
  return r;
}

}  // namespace cfg

struct CaseSpec {
  Json raw;
  std::optional<Domain> domain;
  double lambda = 0.0;
  int cutoff = 0;
  int resolution = 0;  // internal truncation, >= cutoff
  cfg::RuleSpec rule;
  std::uint64_t seed = 0;
};

struct ExperimentConfig {
  std::string experiment;
  std::string name;
  std::uint64_t seed = 0;
  Json raw;
  std::vector<CaseSpec> cases;
};

inline const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> kinds = {"census",    "commutant", "commutator", "intertwine",
                                                 "average",   "kernel-check", "norms"};
  return kinds;
}

struct RunOptions {
  std::optional<std::uint64_t> seed;
  std::optional<int> cutoff;
  std::string export_dir;  // matrices are written here when nonempty
};

/// Applies command-line overrides to the raw config so the report echoes
/// what actually ran.
inline Json apply_overrides(Json raw, const RunOptions& opt) {
  if (opt.seed) raw["seed"] = *opt.seed;
  if (opt.cutoff && raw.contains("cases"))
    for (auto& c : raw["cases"]) {
      c["cutoff"] = *opt.cutoff;
      if (c.contains("resolution") && c["resolution"].get<int>() < *opt.cutoff) c["resolution"] = *opt.cutoff;
    }
  return raw;
}

/// Validates everything that can be checked without computing, including
/// lambda > p - 1 and every symbol spec.
inline ExperimentConfig parse_config(const Json& raw) {
  using namespace cfg;
  ExperimentConfig c;
  c.raw = raw;
  c.experiment = need<std::string>(raw, "experiment", "config");
  const auto& kinds = experiment_kinds();
  if (std::find(kinds.begin(), kinds.end(), c.experiment) == kinds.end())
    bad("config: unknown experiment '" + c.experiment + "'");
  c.name = get<std::string>(raw, "name", c.experiment, "config");
  const auto seed = get<std::int64_t>(raw, "seed", 0, "config");
  if (seed < 0) bad("config: seed must be nonnegative");
  c.seed = static_cast<std::uint64_t>(seed);
  const auto cases = need<Json>(raw, "cases", "config");
  if (!cases.is_array() || cases.empty()) bad("config: 'cases' must be a nonempty array of tables");

  const bool combinatorial = c.experiment == "census" || c.experiment == "commutant";
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto& j = cases[i];
    const std::string where = "cases[" + std::to_string(i) + "]";
    CaseSpec s;
    s.raw = j;
    s.seed = splitmix64(c.seed + i);
    if (combinatorial) {
      if (!j.contains("sweep")) {
        const int n = need<int>(j, "n", where);
        const int m = need<int>(j, "m", where);
        s.cutoff = need<int>(j, "cutoff", where);
        if (n < 1 || m < 1) bad(where + ": n and m must be >= 1");
        if (s.cutoff < 0) bad(where + ": cutoff must be >= 0");
      }
      c.cases.push_back(std::move(s));
      continue;
    }
    s.domain = domain(need<Json>(j, "domain", where), where);
    s.lambda = need<double>(j, "lambda", where);
    try {
      check_weight(*s.domain, s.lambda);
    } catch (const Error& e) {
      bad(where + ": " + e.what());
    }
    s.cutoff = need<int>(j, "cutoff", where);
    if (s.cutoff < 0) bad(where + ": cutoff must be >= 0");
    s.resolution = std::max(s.cutoff, get<int>(j, "resolution", s.cutoff, where));
    for (int t : get<std::vector<int>>(j, "trend", {}, where)) {
      if (t < 0) bad(where + ": trend cutoffs must be >= 0");
      s.resolution = std::max(s.resolution, t);
    }
    s.rule = rule(j.contains("rule") ? j["rule"] : Json::object(), *s.domain, where);
    if (!s.domain->is_ball() && s.rule.kind != "monte_carlo") bad(where + ": matrix balls need a monte_carlo rule");
    // Parse symbols now so that bad specs are config errors.
    for (const char* key : {"symbol", "expected"})
      if (j.contains(key)) symbol(j[key], *s.domain, where + "." + key);
    if (j.contains("symbols"))
      for (const auto& sj : j["symbols"]) symbol(sj, *s.domain, where + ".symbols");
    if (j.contains("pairs"))
      for (const auto& p : j["pairs"]) {
        symbol(need<Json>(p, "a", where + ".pairs"), *s.domain, where + ".pairs.a");
        symbol(need<Json>(p, "b", where + ".pairs"), *s.domain, where + ".pairs.b");
        const auto e = get<std::string>(p, "expect", "zero", where + ".pairs");
        if (e != "zero" && e != "nonzero") bad(where + ".pairs: expect must be zero or nonzero");
      }
    c.cases.push_back(std::move(s));
  }
  return c;
}

// ---------------------------------------------------------------------------
// Shared machinery

inline DomainRule build_rule(const CaseSpec& c) {
  if (c.rule.kind == "monte_carlo") return mc_sample(*c.domain, c.lambda, c.rule.samples, c.seed);
  const int k_max = c.rule.k_max ? c.rule.k_max : c.resolution + 8;
  return radial_rule(*c.domain, c.lambda, k_max, {c.rule.radial_nodes, c.rule.angular_points});
}

inline BasisHandle build_basis(const CaseSpec& c, const DomainRule& rule, int cutoff) {
  return rule.stochastic() ? make_basis(*c.domain, c.lambda, cutoff, &rule) : make_basis(*c.domain, c.lambda, cutoff);
}

inline Json rule_summary(const DomainRule& r) {
  Json j = {{"id", r.id}, {"kind", std::string(to_string(r.kind))}, {"nodes", r.nodes.size()}, {"seed", r.seed}};
  if (r.exactness_degree) j["exactness_degree"] = *r.exactness_degree;
  if (r.stochastic()) {
    j["acceptance_rate"] = r.acceptance_rate();
    j["effective_sample_size"] = r.effective_sample_size();
    j["batches"] = r.batch_count();
  }
  return j;
}

/// Random bounded profile on [0, sqrt(rank)].
inline Profile random_profile(CounterStream& s) {
  const double u = s.uniform();
  const double v = s.uniform();
  switch (static_cast<int>(s.uniform() * 5.0)) {
    case 0: return Profile::exponential(-(0.5 + 2.5 * u));
    case 1: return Profile::polynomial({2.0 * u - 1.0, 2.0 * v - 1.0, s.uniform() - 0.5});
    case 2: return Profile::sine(1.0 + 4.0 * u);
    case 3: return Profile::gaussian(u, 0.2 + 0.8 * v);
    default: return Profile::hyperbolic_tangent(0.5 + 3.0 * u);
  }
}

inline std::string case_label(std::size_t i) { return "case" + std::to_string(i); }

inline void export_matrix(const RunOptions& opt, const std::string& file, const OperatorMatrix& a) {
  if (opt.export_dir.empty()) return;
  std::filesystem::create_directories(opt.export_dir);
  write_text_file((std::filesystem::path(opt.export_dir) / file).string(), canonical_json(to_json(a)));
}

// ---------------------------------------------------------------------------
// Runners

/// Weight census with q-shift family checks.
inline void run_census(const ExperimentConfig& c, Report& r) {
  using namespace cfg;
  Json cases = Json::array();
  for (std::size_t i = 0; i < c.cases.size(); ++i) {
    const auto& j = c.cases[i].raw;
    const std::string where = case_label(i);
    const int n = need<int>(j, "n", where);
    const int m = need<int>(j, "m", where);
    const CensusReport census = weight_census(n, m, c.cases[i].cutoff);
    std::size_t total = 0;
    for (const auto& w : census.classes) total += static_cast<std::size_t>(w.multiplicity());
    r.checks.push_back(check_equal(where + ".multiplicities_sum_to_monomial_count", static_cast<double>(total),
                                   static_cast<double>(monomial_count(n * m, c.cases[i].cutoff))));
    if (j.contains("min_max_multiplicity")) {
      const int lo = need<int>(j, "min_max_multiplicity", where);
      r.checks.push_back({where + ".max_multiplicity_at_least", static_cast<double>(census.max_multiplicity), 0.0,
                          static_cast<double>(lo), ">=", census.max_multiplicity >= lo});
    }
    if (j.contains("expect_max_multiplicity"))
      r.checks.push_back(check_equal(where + ".max_multiplicity", census.max_multiplicity,
                                     need<int>(j, "expect_max_multiplicity", where)));
    if (n == 2 && m == 2) {
      // Each class must be a full q-shift orbit and nothing else.
      int bad_classes = 0;
      for (const auto& w : census.classes) {
        const auto& a = w.members.front();
        std::set<std::vector<int>> orbit;
        for (int q = -w.weight.degree(); q <= w.weight.degree(); ++q) {
          std::vector<int> e = {a.at(0, 0) + q, a.at(0, 1) - q, a.at(1, 0) - q, a.at(1, 1) + q};
          if (std::all_of(e.begin(), e.end(), [](int x) { return x >= 0; })) orbit.insert(e);
        }
        std::set<std::vector<int>> members;
        for (const auto& b : w.members) members.insert(b.entries);
        if (members != orbit) ++bad_classes;
      }
      r.checks.push_back(check_equal(where + ".classes_not_equal_to_q_shift_orbits", bad_classes, 0));
    }
    if (j.contains("slice")) {
      const auto& s = j["slice"];
      const int degree = need<int>(s, "degree", where + ".slice");
      const auto slice = degree_slice(census, degree);
      int max_mult = 0;
      for (const auto& w : slice) max_mult = std::max(max_mult, w.multiplicity());
      int at_max = 0;
      for (const auto& w : slice) at_max += w.multiplicity() == max_mult;
      if (s.contains("weights"))
        r.checks.push_back(check_equal(where + ".slice_weights", static_cast<double>(slice.size()), need<int>(s, "weights", where)));
      if (s.contains("max_multiplicity"))
        r.checks.push_back(check_equal(where + ".slice_max_multiplicity", max_mult, need<int>(s, "max_multiplicity", where)));
      if (s.contains("classes_at_max"))
        r.checks.push_back(check_equal(where + ".slice_classes_at_max", at_max, need<int>(s, "classes_at_max", where)));
    }
    Json cj = {{"census", to_json(census)}};
    cases.push_back(std::move(cj));
  }
  r.data["cases"] = std::move(cases);
}

/// Commutant of the torus action on monomials, and its agreement with the census.
inline void run_commutant(const ExperimentConfig& c, Report& r) {
  using namespace cfg;
  Json cases = Json::array();
  for (std::size_t i = 0; i < c.cases.size(); ++i) {
    const auto& j = c.cases[i].raw;
    const std::string where = case_label(i);
    if (j.contains("sweep")) {
      const auto& s = j["sweep"];
      const int max_n = get<int>(s, "max_n", 2, where);
      const int max_m = get<int>(s, "max_m", 2, where);
      const int max_c = get<int>(s, "max_cutoff", 3, where);
      int disagreements = 0;
      int dimension_mismatches = 0;
      Json rows = Json::array();
      for (int n = 1; n <= max_n; ++n)
        for (int m = 1; m <= max_m; ++m)
          for (int k = 0; k <= max_c; ++k) {
            const auto census = weight_census(n, m, k);
            std::size_t expected = 0;
            for (const auto& w : census.classes) expected += static_cast<std::size_t>(w.multiplicity() * w.multiplicity());
            const auto basis = commutant_basis(torus_generators(n, m, k));
            const bool free = is_multiplicity_free_torus(n, m, k).multiplicity_free;
            const bool comm = algebra_is_commutative(basis).commutative;
            disagreements += free != comm;
            dimension_mismatches += basis.size() != expected;
            rows.push_back({{"n", n}, {"m", m}, {"cutoff", k}, {"dimension", basis.size()},
                            {"sum_multiplicity_squared", expected}, {"multiplicity_free", free}, {"commutative", comm}});
          }
      r.checks.push_back(check_equal(where + ".criteria_disagreements", disagreements, 0));
      r.checks.push_back(check_equal(where + ".dimension_mismatches", dimension_mismatches, 0));
      cases.push_back({{"sweep", std::move(rows)}});
      continue;
    }
    const int n = need<int>(j, "n", where);
    const int m = need<int>(j, "m", where);
    const int k = c.cases[i].cutoff;
    const auto basis = commutant_basis(torus_generators(n, m, k));
    const auto verdict = algebra_is_commutative(basis);
    const auto free = is_multiplicity_free_torus(n, m, k);
    if (j.contains("expect_dimension"))
      r.checks.push_back(check_equal(where + ".dimension", static_cast<double>(basis.size()), need<int>(j, "expect_dimension", where)));
    if (j.contains("expect_commutative"))
      r.checks.push_back(check_equal(where + ".commutative", verdict.commutative, need<bool>(j, "expect_commutative", where)));
    r.checks.push_back(check_equal(where + ".agrees_with_census", verdict.commutative == free.multiplicity_free, 1));
    bool diagonal = true;
    for (const auto& x : basis) diagonal = diagonal && detail::is_diagonal(x);
    Json cj = {{"n", n}, {"m", m}, {"cutoff", k}, {"dimension", basis.size()},
               {"commutative", verdict.commutative}, {"max_relative_commutator", verdict.max_relative_commutator},
               {"multiplicity_free", free.multiplicity_free}, {"diagonal", diagonal}};
    if (j.contains("expect_diagonal"))
      r.checks.push_back(check_equal(where + ".diagonal", diagonal, need<bool>(j, "expect_diagonal", where)));
    cases.push_back(std::move(cj));
  }
  r.data["cases"] = std::move(cases);
}

struct PairOutcome {
  CommutatorNorms norms;
  Significance significance = Significance::inconclusive;
  bool pass = false;
};

/// Exact rules compare against the tolerance; stochastic rules use the
/// 3 and 10 standard-error bands.
inline Check commutator_check(const std::string& name, const CommutatorNorms& n, bool expect_zero, double tol) {
  if (!n.stochastic)
    return expect_zero ? check_below(name, n.spectral, tol) : check_above(name, n.spectral, tol);
  Check ch;
  ch.name = name;
  ch.value = n.spectral;
  ch.error = n.std_error;
  const Significance s = classify(n);
  if (expect_zero) {
    ch.tolerance = 3.0 * n.std_error;
    ch.comparison = "<=3se";
    ch.pass = s == Significance::zero;
  } else {
    ch.tolerance = 10.0 * n.std_error;
    ch.comparison = ">10se";
    ch.pass = s == Significance::nonzero;
  }
  return ch;
}

inline Json norms_json(const CommutatorNorms& n) {
  return {{"spectral", n.spectral}, {"frobenius", n.frobenius}, {"std_error", n.std_error}, {"dimension", n.dim},
          {"significance", n.stochastic ? std::string(to_string(classify(n))) : std::string("exact")}};
}

inline void run_commutator(const ExperimentConfig& c, Report& r, const RunOptions& opt) {
  using namespace cfg;
  Json cases = Json::array();
  for (std::size_t i = 0; i < c.cases.size(); ++i) {
    const auto& cs = c.cases[i];
    const auto& j = cs.raw;
    const Domain& d = *cs.domain;
    const std::string where = case_label(i);
    const DomainRule rule = build_rule(cs);
    const BasisHandle basis = build_basis(cs, rule, cs.resolution);
    const ToeplitzOptions topt{get<std::string>(j, "assembly", "auto", where) == "full" ? Assembly::full : Assembly::automatic};
    const auto trend = get<std::vector<int>>(j, "trend", {}, where);
    const double tol = get<double>(j, "tolerance", 1e-8, where);

    struct Pair {
      Symbol a, b;
      bool expect_zero;
      double tol;
    };
    std::vector<Pair> pairs;
    if (j.contains("pairs"))
      for (const auto& p : j["pairs"])
        pairs.push_back({symbol(p["a"], d, where), symbol(p["b"], d, where),
                         get<std::string>(p, "expect", "zero", where) == "zero", get<double>(p, "tolerance", tol, where)});
    CounterStream rs(cs.seed, 0x5EEDULL);
    for (int k = 0, count = get<int>(j, "random_pairs", 0, where); k < count; ++k) {
      Symbol a = Symbol::radial(random_profile(rs));
      Symbol b = Symbol::radial(random_profile(rs));
      pairs.push_back({a, b, true, tol});
    }

    std::map<std::string, OperatorMatrix> cache;
    auto assemble = [&](const Symbol& s) -> const OperatorMatrix& {
      auto it = cache.find(s.describe());
      if (it == cache.end()) it = cache.emplace(s.describe(), toeplitz_matrix(basis, s, rule, topt)).first;
      return it->second;
    };

    Json pj = Json::array();
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const auto& p = pairs[k];
      const std::string label = where + ".pair" + std::to_string(k);
      const OperatorMatrix& a = assemble(p.a);
      const OperatorMatrix& b = assemble(p.b);
      const std::optional<int> compress = cs.resolution > cs.cutoff ? std::optional<int>(cs.cutoff) : std::nullopt;
      const CommutatorNorms n = commutator_norm(a, b, compress);
      r.checks.push_back(commutator_check(label + ".commutator", n, p.expect_zero, p.tol));
      Json entry = {{"a", p.a.describe()}, {"b", p.b.describe()}, {"expect", p.expect_zero ? "zero" : "nonzero"},
                    {"commutator", norms_json(n)}};

      if (!trend.empty()) {
        Json tj = Json::array();
        std::optional<CommutatorNorms> prev;
        bool ok = true;
        for (int t : trend) {
          const CommutatorNorms nt = commutator_norm(a, b, t);
          if (p.expect_zero) {
            const double floor = nt.stochastic ? 3.0 * nt.std_error : p.tol;
            if (prev && nt.spectral > std::max(prev->spectral, floor)) ok = false;
            if (nt.spectral > floor) ok = false;
          } else {
            const double floor = nt.stochastic ? 10.0 * nt.std_error : p.tol;
            if (!(nt.spectral > floor)) ok = false;
          }
          Json e = norms_json(nt);
          e["cutoff"] = t;
          tj.push_back(std::move(e));
          prev = nt;
        }
        r.checks.push_back(check_equal(label + ".trend_ok", ok, 1));
        entry["trend"] = std::move(tj);
      }

      for (const auto& [side, s] : {std::pair{"a", &p.a}, std::pair{"b", &p.b}}) {
        const OperatorMatrix& m = assemble(*s);
        if (!m.stochastic()) {
          if (s->real_valued())
            r.checks.push_back(check_below(label + "." + side + ".hermitian_defect", hermitian_defect(m), 1e-10));
          r.checks.push_back(
              check_below(label + "." + side + ".norm_excess", spectral_norm(m.entries) - s->esssup_bound(d), 1e-10));
        }
      }
      if (j.contains("spot_check")) {
        const auto& sc = j["spot_check"];
        for (const auto& [side, s] : {std::pair{"a", &p.a}, std::pair{"b", &p.b}}) {
          if (!invariance_subgroup(s->invariance(), d)) continue;
          const auto spot = invariance_spot_check(*s, d, static_cast<std::size_t>(get<int>(sc, "elements", 50, where)),
                                                  static_cast<std::size_t>(get<int>(sc, "points", 20, where)), cs.seed,
                                                  get<double>(sc, "tolerance", 1e-9, where));
          r.checks.push_back(check_below(label + "." + side + ".invariance_" + std::string(to_string(s->invariance())),
                                         spot.max_defect, get<double>(sc, "tolerance", 1e-9, where)));
          r.checks.push_back(
              check_below(label + "." + side + ".membership_defect", spot.max_membership_defect, membership_tolerance));
        }
      }
      export_matrix(opt, c.name + "-" + label + "-a.json", a);
      export_matrix(opt, c.name + "-" + label + "-b.json", b);
      pj.push_back(std::move(entry));
    }
    cases.push_back({{"domain", to_json(d)}, {"lambda", cs.lambda}, {"cutoff", cs.cutoff},
                     {"resolution", cs.resolution}, {"basis_id", basis.basis_id}, {"basis_condition", basis.condition},
                     {"rule", rule_summary(rule)}, {"pairs", std::move(pj)}});
  }
  r.data["cases"] = std::move(cases);
}

inline std::vector<GroupElement> case_elements(const Json& j, const Subgroup& g, std::uint64_t seed, const std::string& where) {
  using namespace cfg;
  std::vector<GroupElement> out;
  if (j.contains("angles"))
    for (double a : need<std::vector<double>>(j, "angles", where)) out.push_back(g.element({a}));
  if (const int k = get<int>(j, "samples", 0, where); k > 0)
    for (auto& e : g.sample(static_cast<std::size_t>(k), seed)) out.push_back(std::move(e));
  return out;
}

inline Subgroup case_subgroup(const Json& j, const Domain& d, const std::string& where) {
  using namespace cfg;
  const auto kind = get<std::string>(j, "subgroup", "rotation", where);
  if (kind == "rotation") return Subgroup::rotation(d.rows(), d.cols());
  if (kind == "torus") return Subgroup::torus(d.rows(), d.cols());
  if (kind == "maximal_compact") return Subgroup::maximal_compact(d.rows(), d.cols());
  bad(where + ": subgroup must be rotation, torus or maximal_compact");
}

inline Json elements_json(const std::vector<GroupElement>& es) {
  Json out = Json::array();
  for (const auto& e : es) {
    Json j = {{"membership_defect", e.membership_defect()}};
    if (e.path()) j["time"] = e.path()->time;
    out.push_back(std::move(j));
  }
  return out;
}

/// pi(h) T_phi - T_{phi_h} pi(h) for sampled compact h.
inline void run_intertwine(const ExperimentConfig& c, Report& r) {
  using namespace cfg;
  Json cases = Json::array();
  for (std::size_t i = 0; i < c.cases.size(); ++i) {
    const auto& cs = c.cases[i];
    const auto& j = cs.raw;
    const std::string where = case_label(i);
    const DomainRule rule = build_rule(cs);
    const BasisHandle basis = build_basis(cs, rule, cs.cutoff);
    const Subgroup g = case_subgroup(j, *cs.domain, where);
    const auto elements = case_elements(j, g, cs.seed, where);
    const double tol = get<double>(j, "tolerance", 1e-6, where);
    Json defects = Json::array();
    for (const auto& sj : need<Json>(j, "symbols", where)) {
      const Symbol s = symbol(sj, *cs.domain, where);
      double worst = 0.0;
      for (const auto& h : elements) worst = std::max(worst, intertwine_defect(basis, h, s, rule));
      r.checks.push_back(check_below(where + ".intertwine[" + s.describe() + "]", worst, tol));
      defects.push_back({{"symbol", s.describe()}, {"max_defect", worst}});
    }
    double membership = 0.0;
    for (const auto& h : elements) membership = std::max(membership, h.membership_defect());
    r.checks.push_back(check_below(where + ".membership_defect", membership, membership_tolerance));
    cases.push_back({{"domain", to_json(*cs.domain)}, {"lambda", cs.lambda}, {"cutoff", cs.cutoff},
                     {"subgroup", g.describe()}, {"elements", elements_json(elements)}, {"defects", std::move(defects)},
                     {"rule", rule_summary(rule)}});
  }
  r.data["cases"] = std::move(cases);
}

/// Averages of symbols and operators over a compact subgroup grid.
inline void run_average(const ExperimentConfig& c, Report& r, const RunOptions& opt) {
  using namespace cfg;
  Json cases = Json::array();
  for (std::size_t i = 0; i < c.cases.size(); ++i) {
    const auto& cs = c.cases[i];
    const auto& j = cs.raw;
    const Domain& d = *cs.domain;
    const std::string where = case_label(i);
    const DomainRule rule = build_rule(cs);
    const BasisHandle basis = build_basis(cs, rule, cs.cutoff);
    const Subgroup g = case_subgroup(j, d, where);
    const GroupRule grule = g.grid(get<int>(j, "points", 2 * cs.cutoff + 3, where));
    const double tol = get<double>(j, "tolerance", 1e-8, where);
    const Symbol phi = symbol(need<Json>(j, "symbol", where), d, where);
    const ToeplitzOptions full{Assembly::full};

    const OperatorMatrix t = toeplitz_matrix(basis, phi, rule, full);
    const OperatorMatrix t_avg = average_operator(g, basis, t, grule, rule);
    const Symbol phi_hat = average_symbol(g, phi, grule, d);
    const OperatorMatrix t_hat = toeplitz_matrix(basis, phi_hat, rule, full);
    r.checks.push_back(check_below(where + ".average_operator_vs_averaged_symbol", max_abs(t_avg.entries - t_hat.entries), tol));
    Json cj = {{"domain", to_json(d)}, {"lambda", cs.lambda}, {"cutoff", cs.cutoff}, {"subgroup", g.describe()},
               {"group_rule", grule.description}, {"rule", rule_summary(rule)}};
    if (j.contains("expected")) {
      const Symbol psi = symbol(j["expected"], d, where);
      const OperatorMatrix te = toeplitz_matrix(basis, psi, rule, full);
      const double diff = max_abs(t_avg.entries - te.entries);
      r.checks.push_back(check_below(where + ".average_operator_vs_expected", diff, tol));
      r.checks.push_back(check_below(where + ".averaged_symbol_vs_expected", max_abs(t_hat.entries - te.entries), tol));
      cj["expected"] = psi.describe();
      cj["max_abs_difference"] = diff;
    }
    double worst = 0.0;
    for (const auto& h : g.sample(static_cast<std::size_t>(get<int>(j, "commute_samples", 5, where)), cs.seed)) {
      const CMatrix p = pi_lambda_matrix(basis, h, rule).entries;
      worst = std::max(worst, max_abs(p * t_avg.entries - t_avg.entries * p));
    }
    r.checks.push_back(check_below(where + ".average_commutes_with_group", worst, tol));
    export_matrix(opt, c.name + "-" + where + "-average.json", t_avg);
    cases.push_back(std::move(cj));
  }
  r.data["cases"] = std::move(cases);
}

/// Reproducing property and closed-form kernel on rank-one domains.
inline void run_kernel_check(const ExperimentConfig& c, Report& r) {
  using namespace cfg;
  Json cases = Json::array();
  for (std::size_t i = 0; i < c.cases.size(); ++i) {
    const auto& cs = c.cases[i];
    const auto& j = cs.raw;
    const Domain& d = *cs.domain;
    const std::string where = case_label(i);
    const DomainRule rule = build_rule(cs);
    const BasisHandle basis = build_basis(cs, rule, cs.cutoff);
    CounterStream rs(cs.seed, 0xC0FFEEULL);
    Json cj = {{"domain", to_json(d)}, {"lambda", cs.lambda}, {"cutoff", cs.cutoff}, {"rule", rule_summary(rule)}};

    if (j.contains("reproduce")) {
      const auto& rj = j["reproduce"];
      const int count = get<int>(rj, "polynomials", 5, where);
      const double tol = get<double>(rj, "tolerance", 1e-10, where);
      double worst = 0.0;
      for (int k = 0; k < count; ++k) {
        CVector coeff(basis.size());
        for (Eigen::Index a = 0; a < coeff.size(); ++a) coeff(a) = cplx(rs.normal(), rs.normal());
        const auto f = [&](const Point& z) { return cplx(basis.monomials(z).cwiseProduct(coeff).sum()); };
        const CVector proj = bergman_project(basis, f, rule);
        const CVector rec = basis.transform * proj;
        worst = std::max(worst, (rec - coeff).cwiseAbs().maxCoeff());
      }
      r.checks.push_back(check_below(where + ".reproduce_coefficients", worst, tol));
      cj["reproduce_max_error"] = worst;
    }

    if (j.contains("closed_form")) {
      require(d.is_ball(), ErrorCode::config, where + ": closed-form kernel check needs a rank-one domain");
      const auto& kj = j["closed_form"];
      const int count = get<int>(kj, "pairs", 20, where);
      const double max_norm = get<double>(kj, "max_norm", 0.7, where);
      double worst_ratio = 0.0;
      double worst_diff = 0.0;
      double worst_tail = 0.0;
      for (int k = 0; k < count; ++k) {
        const Point z = random_point(d, rs, max_norm);
        const Point w = random_point(d, rs, max_norm);
        const cplx x = w.cwiseProduct(z.conjugate()).sum();  // conj(<z, w>) ... swapped below
        const cplx zw = std::conj(x);                         // <z, w> = sum z_j conj(w_j)
        const cplx exact = std::pow(1.0 - zw, -cs.lambda);
        const cplx trunc = kernel_eval(basis, z, w);
        // Coefficients (lambda)_k / k! of the tail, dominated by a geometric series.
        const int cut = cs.cutoff;
        double a = 1.0;
        for (int q = 1; q <= cut + 1; ++q) a *= (cs.lambda + q - 1) / q;
        const double ax = std::abs(zw);
        const double rho = (cs.lambda + cut + 1) / (cut + 2) * ax;
        require(rho < 1.0, ErrorCode::config, where + ": points too close to the boundary for the tail bound");
        const double tail = a * std::pow(ax, cut + 1) / (1.0 - rho);
        const double allowance = tail + 1e-13 * std::abs(exact) * basis.size();
        const double diff = std::abs(trunc - exact);
        worst_ratio = std::max(worst_ratio, diff / allowance);
        worst_diff = std::max(worst_diff, diff);
        worst_tail = std::max(worst_tail, tail);
      }
      Check ch{where + ".kernel_within_tail_bound", worst_ratio, worst_diff, 1.0, "<=", worst_ratio <= 1.0};
      r.checks.push_back(ch);
      cj["kernel_max_difference"] = worst_diff;
      cj["kernel_max_tail_bound"] = worst_tail;
    }
    cases.push_back(std::move(cj));
  }
  r.data["cases"] = std::move(cases);
}

/// T_{|z|^2} on rank-one domains is diagonal with (k + n)/(k + lambda) on degree k.
inline void run_norms(const ExperimentConfig& c, Report& r) {
  using namespace cfg;
  Json cases = Json::array();
  for (std::size_t i = 0; i < c.cases.size(); ++i) {
    const auto& cs = c.cases[i];
    const Domain& d = *cs.domain;
    const std::string where = case_label(i);
    require(d.is_ball(), ErrorCode::config, where + ": eigenvalue law is for rank-one domains");
    const double tol = get<double>(cs.raw, "tolerance", 1e-10, where);
    const DomainRule rule = build_rule(cs);
    const BasisHandle basis = build_basis(cs, rule, cs.cutoff);
    const OperatorMatrix t = toeplitz_matrix(basis, Symbol::radial(Profile::power(2)), rule, {Assembly::full});
    double worst_diag = 0.0;
    double worst_err = 0.0;
    Json diag = Json::array();
    for (Eigen::Index k = 0; k < t.size(); ++k) {
      const int deg = basis.degree(k);
      const double expected = (deg + d.dim()) / (deg + cs.lambda);
      const double err = t.std_error.size() ? t.std_error(k, k) : 0.0;
      worst_diag = std::max(worst_diag, std::abs(t.entries(k, k) - expected));
      worst_err = std::max(worst_err, err);
      diag.push_back({{"degree", deg}, {"value", t.entries(k, k).real()}, {"expected", expected}});
    }
    CMatrix off = t.entries;
    off.diagonal().setZero();
    r.checks.push_back(check_below(where + ".diagonal_law", worst_diag, tol, worst_err));
    r.checks.push_back(check_below(where + ".off_diagonal", max_abs(off), tol));
    cases.push_back({{"domain", to_json(d)}, {"lambda", cs.lambda}, {"cutoff", cs.cutoff}, {"diagonal", std::move(diag)},
                     {"rule", rule_summary(rule)}});
  }
  r.data["cases"] = std::move(cases);
}

/// Runs a validated config. Module errors during the computation are recorded
/// in the report and fail the verdict.
inline Report run(const ExperimentConfig& c, const RunOptions& opt = {}) {
  Report r;
  r.experiment = c.experiment;
  r.name = c.name;
  r.seed = c.seed;
  r.inputs = c.raw;
  try {
    if (c.experiment == "census") run_census(c, r);
    else if (c.experiment == "commutant") run_commutant(c, r);
    else if (c.experiment == "commutator") run_commutator(c, r, opt);
    else if (c.experiment == "intertwine") run_intertwine(c, r);
    else if (c.experiment == "average") run_average(c, r, opt);
    else if (c.experiment == "kernel-check") run_kernel_check(c, r);
    else if (c.experiment == "norms") run_norms(c, r);
  } catch (const Error& e) {
    r.error = std::make_pair(std::string(to_string(e.code())), std::string(e.what()));
  }
  return r;
}

}  // namespace bergman
