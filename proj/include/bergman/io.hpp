#pragma once

// JSON and CSV exchange formats. Reports and exports use a canonical writer:
// sorted keys, floats with 17 significant digits, no insignificant whitespace
// beyond one space after separators.

#include "bergman/group.hpp"
#include "bergman/multiplicity.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>

namespace bergman {

using Json = nlohmann::json;

inline constexpr int format_version = 1;

// ---------------------------------------------------------------------------
// Canonical text

namespace detail {

inline void dump_canonical(const Json& j, std::string& out, int indent, int depth) {
  const std::string pad = indent ? "\n" + std::string(static_cast<std::size_t>(indent * (depth + 1)), ' ') : "";
  const std::string close = indent ? "\n" + std::string(static_cast<std::size_t>(indent * depth), ' ') : "";
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {  // std::map keeps keys sorted
        out += first ? "" : ",";
        out += pad;
        first = false;
        out += Json(it.key()).dump();
        out += ": ";
        dump_canonical(it.value(), out, indent, depth + 1);
      }
      out += close + "}";
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      // Numeric arrays stay on one line.
      const bool flat = std::all_of(j.begin(), j.end(), [](const Json& e) { return e.is_primitive(); });
      out += "[";
      bool first = true;
      for (const auto& e : j) {
        out += first ? "" : (flat ? ", " : ",");
        if (!flat) out += pad;
        first = false;
        dump_canonical(e, out, flat ? 0 : indent, depth + 1);
      }
      out += (flat ? "" : close) + "]";
      return;
    }
    case Json::value_t::number_float: {
      const double v = j.get<double>();
      require(std::isfinite(v), ErrorCode::non_finite, "cannot serialize a non-finite number");
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out += buf;
      return;
    }
    default: out += j.dump();
  }
}

}  // namespace detail

inline std::string canonical_json(const Json& j, int indent = 2) {
  std::string out;
  detail::dump_canonical(j, out, indent, 0);
  return out + "\n";
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::io, "cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    fail(ErrorCode::io, path + ": " + e.what());
  }
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorCode::io, "cannot write " + path);
  out << text;
}

// ---------------------------------------------------------------------------
// Numbers

inline Json to_json(cplx z) { return Json::array({z.real(), z.imag()}); }

inline cplx complex_from_json(const Json& j) {
  require(j.is_array() && j.size() == 2, ErrorCode::io, "complex numbers are [re, im] pairs");
  return {j[0].get<double>(), j[1].get<double>()};
}

/// Row-major rows of [re, im] pairs.
inline Json to_json(const CMatrix& a) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index k = 0; k < a.cols(); ++k) row.push_back(to_json(a(i, k)));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline CMatrix matrix_from_json(const Json& j) {
  require(j.is_array(), ErrorCode::io, "matrix must be an array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows ? static_cast<Eigen::Index>(j[0].size()) : 0;
  CMatrix a(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& row = j[static_cast<std::size_t>(i)];
    require(row.is_array() && static_cast<Eigen::Index>(row.size()) == cols, ErrorCode::io, "ragged matrix rows");
    for (Eigen::Index k = 0; k < cols; ++k) a(i, k) = complex_from_json(row[static_cast<std::size_t>(k)]);
  }
  return a;
}

inline Json to_json(const RMatrix& a) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index k = 0; k < a.cols(); ++k) row.push_back(a(i, k));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline RMatrix real_matrix_from_json(const Json& j) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows ? static_cast<Eigen::Index>(j[0].size()) : 0;
  RMatrix a(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index k = 0; k < cols; ++k) a(i, k) = j[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)].get<double>();
  return a;
}

// ---------------------------------------------------------------------------
// Domains, multi-indices, weights

/// Only the shape is stored authoritatively; derived constants are written
/// for readers and recomputed on load.
inline Json to_json(const Domain& d) {
  return {{"kind", d.is_ball() ? "unit_ball" : "matrix_ball"},
          {"n", d.rows()},
          {"m", d.cols()},
          {"dim", d.dim()},
          {"rank", d.rank()},
          {"tube_dim", d.tube_dim()},
          {"genus", d.genus()}};
}

inline Domain domain_from_json(const Json& j) {
  try {
    const auto kind = j.at("kind").get<std::string>();
    const int n = j.at("n").get<int>();
    Domain d = kind == "unit_ball" ? Domain::unit_ball(n)
               : kind == "matrix_ball" ? Domain::matrix_ball(n, j.at("m").get<int>())
                                       : (fail(ErrorCode::io, "unknown domain kind " + kind), Domain::unit_ball(1));
    if (j.contains("genus"))
      require(j["genus"].get<int>() == d.genus(), ErrorCode::io, "stored genus disagrees with the shape");
    return d;
  } catch (const Json::exception& e) {
    fail(ErrorCode::io, std::string("domain: ") + e.what());
  }
}

inline Json to_json(const MultiIndex& a) {
  Json rows = Json::array();
  for (int j = 0; j < a.rows; ++j) {
    Json row = Json::array();
    for (int k = 0; k < a.cols; ++k) row.push_back(a.at(j, k));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline MultiIndex multi_index_from_json(const Json& j) {
  MultiIndex a;
  a.rows = static_cast<int>(j.size());
  a.cols = a.rows ? static_cast<int>(j[0].size()) : 0;
  for (const auto& row : j)
    for (const auto& e : row) a.entries.push_back(e.get<int>());
  return a;
}

inline Json to_json(const Weight& w) { return {{"rows", w.rows}, {"cols", w.cols}}; }

// ---------------------------------------------------------------------------
// Rules

inline Json to_json(const DomainRule& r) {
  Json nodes = Json::array();
  for (const auto& z : r.nodes) nodes.push_back(to_json(z));
  Json j = {{"version", format_version},
            {"kind", std::string(to_string(r.kind))},
            {"id", r.id},
            {"seed", r.seed},
            {"description", r.description},
            {"domain", to_json(r.domain)},
            {"lambda", r.lambda},
            {"nodes", std::move(nodes)},
            {"weights", r.weights},
            {"batch_offsets", r.batch_offsets},
            {"proposals", r.proposals},
            {"raw_weight_sum", r.raw_weight_sum}};
  j["exactness_degree"] = r.exactness_degree ? Json(*r.exactness_degree) : Json(nullptr);
  if (r.rings)
    j["rings"] = {{"radii", r.rings->radii},
                  {"radial_weights", r.rings->radial_weights},
                  {"angular_points", r.rings->angular_points}};
  return j;
}

inline DomainRule rule_from_json(const Json& j) {
  try {
    DomainRule r;
    require(j.at("version").get<int>() == format_version, ErrorCode::io, "unsupported rule format version");
    const auto kind = j.at("kind").get<std::string>();
    r.kind = kind == "monte_carlo" ? RuleKind::monte_carlo : RuleKind::radial_angular;
    r.id = j.at("id").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.description = j.at("description").get<std::string>();
    r.domain = domain_from_json(j.at("domain"));
    r.lambda = j.at("lambda").get<double>();
    for (const auto& z : j.at("nodes")) r.nodes.push_back(matrix_from_json(z));
    r.weights = j.at("weights").get<std::vector<double>>();
    r.batch_offsets = j.at("batch_offsets").get<std::vector<std::size_t>>();
    r.proposals = j.at("proposals").get<std::size_t>();
    r.raw_weight_sum = j.at("raw_weight_sum").get<double>();
    if (!j.at("exactness_degree").is_null()) r.exactness_degree = j["exactness_degree"].get<int>();
    if (j.contains("rings"))
      r.rings = RingLayout{j["rings"].at("radii").get<std::vector<double>>(),
                           j["rings"].at("radial_weights").get<std::vector<double>>(),
                           j["rings"].at("angular_points").get<int>()};
    require(r.nodes.size() == r.weights.size(), ErrorCode::io, "rule nodes and weights differ in length");
    return r;
  } catch (const Json::exception& e) {
    fail(ErrorCode::io, std::string("rule: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Bases (cache files keyed by basis_id)

inline Json to_json(const BasisHandle& b) {
  Json reps = Json::array();
  for (const auto& r : b.transform_replicates) reps.push_back(to_json(r));
  // The main transform is rebuilt from the Gram matrix on load.
  Json j = {{"version", format_version},
            {"basis_id", b.basis_id},
            {"domain", to_json(b.domain)},
            {"lambda", b.lambda},
            {"cutoff", b.cutoff},
            {"source", b.source},
            {"seed", b.seed},
            {"condition", b.condition},
            {"gram", to_json(b.gram)},
            {"transform_replicates", std::move(reps)}};
  return j;
}

inline BasisHandle basis_from_json(const Json& j) {
  try {
    require(j.at("version").get<int>() == format_version, ErrorCode::io, "unsupported basis format version");
    GramEstimate g;
    g.gram = matrix_from_json(j.at("gram"));
    g.source = j.at("source").get<std::string>();
    const Domain d = domain_from_json(j.at("domain"));
    BasisHandle b = basis_from_gram(d, j.at("lambda").get<double>(), j.at("cutoff").get<int>(), std::move(g),
                                    j.at("seed").get<std::uint64_t>());
    for (const auto& r : j.at("transform_replicates")) b.transform_replicates.push_back(matrix_from_json(r));
    require(b.basis_id == j.at("basis_id").get<std::string>(), ErrorCode::io, "basis cache key mismatch");
    return b;
  } catch (const Json::exception& e) {
    fail(ErrorCode::io, std::string("basis: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Operator matrices

inline Json to_json(const OperatorMatrix& a) {
  Json j = {{"version", format_version},
            {"basis_id", a.basis_id},
            {"lambda", a.lambda},
            {"cutoff", a.cutoff},
            {"degrees", a.degrees},
            {"entries", to_json(a.entries)},
            {"meta",
             {{"description", a.meta.description},
              {"rule_id", a.meta.rule_id},
              {"rule_kind", a.meta.rule_kind},
              {"seed", a.meta.seed}}}};
  j["std_error"] = a.std_error.size() ? to_json(a.std_error) : Json(nullptr);
  return j;
}

inline OperatorMatrix operator_from_json(const Json& j) {
  try {
    require(j.at("version").get<int>() == format_version, ErrorCode::io, "unsupported matrix format version");
    OperatorMatrix a;
    a.basis_id = j.at("basis_id").get<std::string>();
    a.lambda = j.at("lambda").get<double>();
    a.cutoff = j.at("cutoff").get<int>();
    a.degrees = j.at("degrees").get<std::vector<int>>();
    a.entries = matrix_from_json(j.at("entries"));
    const auto& m = j.at("meta");
    a.meta = {m.at("description").get<std::string>(), m.at("rule_id").get<std::string>(),
              m.at("rule_kind").get<std::string>(), m.at("seed").get<std::uint64_t>()};
    if (!j.at("std_error").is_null()) a.std_error = real_matrix_from_json(j["std_error"]);
    require(a.entries.rows() == a.entries.cols(), ErrorCode::io, "operator matrix is not square");
    require(static_cast<Eigen::Index>(a.degrees.size()) == a.entries.rows(), ErrorCode::io, "degree list length");
    return a;
  } catch (const Json::exception& e) {
    fail(ErrorCode::io, std::string("matrix: ") + e.what());
  }
}

struct MatrixDiff {
  double max_abs = 0.0;
  double tolerance = 0.0;
  bool same_basis = false;
  bool pass = false;
};

inline MatrixDiff diff_matrices(const OperatorMatrix& a, const OperatorMatrix& b, double tol) {
  MatrixDiff d;
  d.tolerance = tol;
  d.same_basis = a.basis_id == b.basis_id;
  if (a.entries.rows() != b.entries.rows() || a.entries.cols() != b.entries.cols()) {
    d.max_abs = std::numeric_limits<double>::infinity();
    return d;
  }
  d.max_abs = max_abs(a.entries - b.entries);
  d.pass = d.same_basis && d.max_abs <= tol;
  return d;
}

inline Json to_json(const MatrixDiff& d) {
  Json j = {{"same_basis", d.same_basis}, {"tolerance", d.tolerance}, {"pass", d.pass}};
  j["max_abs"] = std::isfinite(d.max_abs) ? Json(d.max_abs) : Json("inf");
  return j;
}

// ---------------------------------------------------------------------------
// Census

inline Json to_json(const CensusReport& r) {
  Json classes = Json::array();
  for (const auto& c : r.classes) {
    Json members = Json::array();
    for (const auto& a : c.members) members.push_back(to_json(a));
    classes.push_back({{"weight", to_json(c.weight)},
                       {"degree", c.weight.degree()},
                       {"multiplicity", c.multiplicity()},
                       {"members", std::move(members)}});
  }
  Json witnesses = Json::array();
  for (const auto& [a, b] : r.witnesses) witnesses.push_back(Json::array({to_json(a), to_json(b)}));
  Json j = {{"n", r.n},
            {"m", r.m},
            {"cutoff", r.cutoff},
            {"monomial_count", r.monomial_count},
            {"max_multiplicity", r.max_multiplicity},
            {"classes", std::move(classes)},
            {"witnesses", std::move(witnesses)}};
  j["q_shift_only"] = r.q_shift_only ? Json(*r.q_shift_only) : Json(nullptr);
  return j;
}

inline std::string multi_index_text(const MultiIndex& a) {
  std::string s;
  for (int j = 0; j < a.rows; ++j) {
    s += j ? ";" : "";
    for (int k = 0; k < a.cols; ++k) s += (k ? " " : "") + std::to_string(a.at(j, k));
  }
  return s;
}

/// One row per weight: rows, cols, multiplicity, members.
inline std::string census_csv(const CensusReport& r) {
  auto vec = [](const std::vector<int>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + std::to_string(v[i]);
    return s;
  };
  std::string out = "degree,rows,cols,multiplicity,members\n";
  for (const auto& c : r.classes) {
    std::string members;
    for (std::size_t i = 0; i < c.members.size(); ++i) members += (i ? "|" : "") + multi_index_text(c.members[i]);
    out += std::to_string(c.weight.degree()) + "," + vec(c.weight.rows) + "," + vec(c.weight.cols) + "," +
           std::to_string(c.multiplicity()) + "," + members + "\n";
  }
  return out;
}

inline Json to_json(const GroupElement& g) {
  Json j = {{"n", g.n()}, {"m", g.m()}, {"matrix", to_json(g.matrix())}, {"membership_defect", g.membership_defect()}};
  if (g.path()) j["path"] = {{"generator", to_json(g.path()->generator)}, {"time", g.path()->time}};
  return j;
}

}  // namespace bergman
