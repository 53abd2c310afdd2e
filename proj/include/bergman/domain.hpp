#pragma once

// Bounded symmetric domains of type I in their Harish-Chandra realization:
// the unit ball B^n and the matrix ball D_{n,m} = { Z in M_{n x m}(C) : ||Z||_op < 1 }.

#include "bergman/core.hpp"

#include <compare>
#include <numeric>
#include <sstream>

namespace bergman {

enum class DomainKind { unit_ball, matrix_ball };

/// A domain is stored as its matrix shape (n x m). UnitBall(n) is the n x 1
/// matrix ball; the kind is kept only for naming and serialization.
class Domain {
 public:
  static Domain unit_ball(int n) { return Domain(DomainKind::unit_ball, n, 1); }
  static Domain matrix_ball(int n, int m) { return Domain(DomainKind::matrix_ball, n, m); }

  DomainKind kind() const { return kind_; }
  int rows() const { return n_; }
  int cols() const { return m_; }
  int dim() const { return n_ * m_; }
  int rank() const { return std::min(n_, m_); }
  int tube_dim() const { return rank() * rank(); }
  int genus() const { return genus_; }
  /// Rank-one domains are complex balls; their monomials are orthogonal with
  /// closed-form norms.
  bool is_ball() const { return rank() == 1; }
  bool is_disk() const { return n_ == 1 && m_ == 1; }

  /// Same shape means same domain for every computation.
  bool same_shape(const Domain& o) const { return n_ == o.n_ && m_ == o.m_; }
  bool operator==(const Domain& o) const = default;

  std::string describe() const {
    std::ostringstream os;
    if (kind_ == DomainKind::unit_ball)
      os << "unit_ball(" << n_ << ")";
    else
      os << "matrix_ball(" << n_ << "," << m_ << ")";
    return os.str();
  }
  /// Canonical key used in content hashes; independent of kind.
  std::string shape_key() const { return std::to_string(n_) + "x" + std::to_string(m_); }

 private:
  Domain(DomainKind kind, int n, int m) : kind_(kind), n_(n), m_(m) {
    require(n >= 1 && m >= 1, ErrorCode::invalid_argument, "domain dimensions must be positive");
    const int num = dim() + tube_dim();
    require(num % rank() == 0, ErrorCode::invalid_argument, "genus is not an integer");
    genus_ = num / rank();
  }

  DomainKind kind_;
  int n_;
  int m_;
  int genus_ = 0;
};

inline Domain make_domain(DomainKind kind, int n, int m = 1) {
  if (kind == DomainKind::unit_ball) {
    require(m == 1, ErrorCode::invalid_argument, "unit ball takes a single dimension");
    return Domain::unit_ball(n);
  }
  return Domain::matrix_ball(n, m);
}

/// Points are n x m complex matrices (n x 1 columns for the unit ball).
using Point = CMatrix;

inline void check_shape(const Domain& d, const Point& z) {
  require(z.rows() == d.rows() && z.cols() == d.cols(), ErrorCode::shape_mismatch,
          "point shape " + std::to_string(z.rows()) + "x" + std::to_string(z.cols()) +
              " does not match " + d.describe());
}

inline double operator_norm(const Point& z) {
  if (z.cols() == 1 || z.rows() == 1) return z.norm();
  return spectral_norm(z);
}

/// Gram matrix of the smaller side: Z Z* or Z* Z, whichever is min(n,m) square.
inline CMatrix small_gram(const Point& z) {
  if (z.rows() <= z.cols()) return z * z.adjoint();
  return z.adjoint() * z;
}

inline bool contains(const Domain& d, const Point& z) {
  check_shape(d, z);
  if (!z.allFinite()) return false;
  return operator_norm(z) < 1.0;
}

/// det(I - Z Z*), computed on the smaller side; returns a non-positive value
/// when the point is outside.
inline double defect_determinant(const Point& z) {
  if (z.cols() == 1 || z.rows() == 1) return 1.0 - z.squaredNorm();
  const CMatrix g = small_gram(z);
  const CMatrix a = CMatrix::Identity(g.rows(), g.cols()) - g;
  Eigen::LLT<CMatrix> llt(a);
  if (llt.info() != Eigen::Success) return 0.0;
  double det = 1.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) det *= std::norm(llt.matrixLLT()(i, i));
  return det;
}

inline void check_weight(const Domain& d, double lambda) {
  require(std::isfinite(lambda) && lambda > d.genus() - 1, ErrorCode::weight_too_small,
          "weight " + std::to_string(lambda) + " must exceed genus - 1 = " +
              std::to_string(d.genus() - 1) + " for " + d.describe());
}

/// Unnormalized density of mu_lambda against Lebesgue measure:
/// det(I - Z Z*)^(lambda - p).
inline double density_unnormalized(const Domain& d, double lambda, const Point& z) {
  check_weight(d, lambda);
  require(contains(d, z), ErrorCode::outside_domain, "point outside " + d.describe());
  return std::pow(defect_determinant(z), lambda - d.genus());
}

// ---------------------------------------------------------------------------
// Multi-indices

/// Exponent grid alpha in N^{n x m}, stored row-major.
struct MultiIndex {
  int rows = 0;
  int cols = 0;
  std::vector<int> entries;

  MultiIndex() = default;
  MultiIndex(int n, int m) : rows(n), cols(m), entries(static_cast<std::size_t>(n * m), 0) {}
  MultiIndex(int n, int m, std::vector<int> e) : rows(n), cols(m), entries(std::move(e)) {
    require(entries.size() == static_cast<std::size_t>(n * m), ErrorCode::shape_mismatch,
            "multi-index entry count");
    for (int v : entries) require(v >= 0, ErrorCode::invalid_argument, "negative exponent");
  }

  int& at(int j, int k) { return entries[static_cast<std::size_t>(j * cols + k)]; }
  int at(int j, int k) const { return entries[static_cast<std::size_t>(j * cols + k)]; }
  int degree() const { return std::accumulate(entries.begin(), entries.end(), 0); }

  auto operator<=>(const MultiIndex&) const = default;

  std::string describe() const {
    std::ostringstream os;
    os << "[";
    for (int j = 0; j < rows; ++j) {
      if (j) os << ",";
      if (cols > 1) os << "[";
      for (int k = 0; k < cols; ++k) os << (k ? "," : "") << at(j, k);
      if (cols > 1) os << "]";
    }
    os << "]";
    return os.str();
  }
};

/// All multi-indices of total degree <= max_degree, degree first and then
/// descending lexicographic order on the row-major exponent vector (so z_11
/// powers lead within each degree).
inline std::vector<MultiIndex> multi_index_enumerate(const Domain& d, int max_degree) {
  require(max_degree >= 0, ErrorCode::invalid_argument, "max_degree must be >= 0");
  const int slots = d.dim();
  std::vector<MultiIndex> out;
  std::vector<int> e(static_cast<std::size_t>(slots), 0);
  for (int deg = 0; deg <= max_degree; ++deg) {
    // Compositions of deg into `slots` parts in descending lex order.
    auto rec = [&](auto&& self, int slot, int remaining) -> void {
      if (slot == slots - 1) {
        e[static_cast<std::size_t>(slot)] = remaining;
        out.emplace_back(d.rows(), d.cols(), e);
        return;
      }
      for (int v = remaining; v >= 0; --v) {
        e[static_cast<std::size_t>(slot)] = v;
        self(self, slot + 1, remaining - v);
      }
    };
    rec(rec, 0, deg);
  }
  return out;
}

/// Powers table z_jk^0..z_jk^max for every entry; used to evaluate many
/// monomials at one point.
class MonomialEvaluator {
 public:
  explicit MonomialEvaluator(int max_degree) : max_degree_(max_degree) {}

  void set_point(const Point& z) {
    const auto slots = static_cast<std::size_t>(z.size());
    powers_.assign(slots * static_cast<std::size_t>(max_degree_ + 1), cplx(1.0, 0.0));
    const int n = static_cast<int>(z.rows());
    const int m = static_cast<int>(z.cols());
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < m; ++k) {
        const std::size_t s = static_cast<std::size_t>(j * m + k);
        cplx* row = &powers_[s * static_cast<std::size_t>(max_degree_ + 1)];
        for (int p = 1; p <= max_degree_; ++p) row[p] = row[p - 1] * z(j, k);
      }
  }

  cplx operator()(const MultiIndex& a) const {
    cplx v(1.0, 0.0);
    for (std::size_t s = 0; s < a.entries.size(); ++s)
      if (a.entries[s]) v *= powers_[s * static_cast<std::size_t>(max_degree_ + 1) + a.entries[s]];
    return v;
  }

 private:
  int max_degree_;
  std::vector<cplx> powers_;
};

inline cplx monomial(const Point& z, const MultiIndex& a) {
  MonomialEvaluator ev(std::max(1, a.degree()));
  ev.set_point(z);
  return ev(a);
}

}  // namespace bergman
