#pragma once

// Torus weight censuses of monomial spaces and commutants of finite families
// of matrices.

#include "bergman/weight.hpp"

#include <map>

namespace bergman {

struct WeightClass {
  Weight weight;
  std::vector<MultiIndex> members;  // in enumeration order
  int multiplicity() const { return static_cast<int>(members.size()); }
};

struct CensusReport {
  int n = 0;
  int m = 0;
  int cutoff = 0;
  std::vector<WeightClass> classes;  // ordered by degree, then weight
  int max_multiplicity = 0;
  std::vector<std::pair<MultiIndex, MultiIndex>> witnesses;  // (first member, other member)
  std::size_t monomial_count = 0;
  /// For 2x2 exponents: every collision is alpha + q [[1,-1],[-1,1]].
  std::optional<bool> q_shift_only;
};

/// C(N + c, c) monomials of degree <= c in N variables.
inline std::size_t monomial_count(int variables, int cutoff) {
  std::size_t out = 1;
  for (int k = 1; k <= cutoff; ++k) out = out * static_cast<std::size_t>(variables + k) / static_cast<std::size_t>(k);
  return out;
}

inline bool is_q_shift(const MultiIndex& a, const MultiIndex& b) {
  if (a.rows != 2 || a.cols != 2) return false;
  const int q = b.at(0, 0) - a.at(0, 0);
  return b.at(0, 1) - a.at(0, 1) == -q && b.at(1, 0) - a.at(1, 0) == -q && b.at(1, 1) - a.at(1, 1) == q;
}

inline CensusReport weight_census(int n, int m, int cutoff) {
  require(cutoff >= 0, ErrorCode::invalid_argument, "cutoff must be >= 0");
  const Domain d = Domain::matrix_ball(n, m);
  CensusReport r;
  r.n = n;
  r.m = m;
  r.cutoff = cutoff;
  const auto indices = multi_index_enumerate(d, cutoff);
  r.monomial_count = indices.size();
  std::map<std::pair<int, Weight>, std::vector<MultiIndex>> groups;
  for (const auto& a : indices) groups[{a.degree(), weight_of(a)}].push_back(a);
  bool q_only = true;
  for (auto& [key, members] : groups) {
    WeightClass c{key.second, std::move(members)};
    r.max_multiplicity = std::max(r.max_multiplicity, c.multiplicity());
    for (std::size_t i = 1; i < c.members.size(); ++i) {
      r.witnesses.emplace_back(c.members.front(), c.members[i]);
      q_only = q_only && is_q_shift(c.members.front(), c.members[i]);
    }
    r.classes.push_back(std::move(c));
  }
  if (n == 2 && m == 2) r.q_shift_only = q_only;
  return r;
}

/// Classes of one exact degree.
inline std::vector<WeightClass> degree_slice(const CensusReport& r, int degree) {
  std::vector<WeightClass> out;
  for (const auto& c : r.classes)
    if (c.weight.degree() == degree) out.push_back(c);
  return out;
}

struct MultiplicityVerdict {
  bool multiplicity_free = true;
  std::optional<std::pair<MultiIndex, MultiIndex>> witness;
};

/// The character twist j^(lambda/p) shifts every weight of a fixed degree by
/// the same amount, so it cannot merge or split classes and is left out.
inline MultiplicityVerdict is_multiplicity_free_torus(int n, int m, int cutoff) {
  const CensusReport r = weight_census(n, m, cutoff);
  MultiplicityVerdict v;
  v.multiplicity_free = r.max_multiplicity <= 1;
  if (!r.witnesses.empty()) v.witness = r.witnesses.front();
  return v;
}

/// Torus action on monomials of degree <= cutoff, as diagonal matrices in
/// the monomial basis: the coordinate generators of the Lie algebra of the
/// diagonal torus of SU(n,m), plus n+m-1 elements with rationally independent
/// angles. A monomial with weight (r, c) has eigenvalue sum_j s_j r_j -
/// sum_k t_k c_k under the generator diag(i s, i t).
inline std::vector<CMatrix> torus_generators(int n, int m, int cutoff) {
  const Domain d = Domain::matrix_ball(n, m);
  const auto indices = multi_index_enumerate(d, cutoff);
  const auto dim = static_cast<Eigen::Index>(indices.size());
  std::vector<Weight> weights;
  for (const auto& a : indices) weights.push_back(weight_of(a));

  // Directions e_j - e_last in (s, t) coordinates.
  const int k = n + m;
  auto eigenvalue = [&](const Weight& w, const std::vector<double>& st) {
    double v = 0.0;
    for (int j = 0; j < n; ++j) v += st[static_cast<std::size_t>(j)] * w.rows[static_cast<std::size_t>(j)];
    for (int c = 0; c < m; ++c) v -= st[static_cast<std::size_t>(n + c)] * w.cols[static_cast<std::size_t>(c)];
    return v;
  };
  std::vector<CMatrix> out;
  for (int j = 0; j + 1 < k; ++j) {
    std::vector<double> st(static_cast<std::size_t>(k), 0.0);
    st[static_cast<std::size_t>(j)] = 1.0;
    st[static_cast<std::size_t>(k - 1)] = -1.0;
    CMatrix g = CMatrix::Zero(dim, dim);
    for (Eigen::Index a = 0; a < dim; ++a) g(a, a) = eigenvalue(weights[static_cast<std::size_t>(a)], st);
    out.push_back(std::move(g));
  }
  static constexpr double primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};
  for (int e = 0; e + 1 < k; ++e) {
    std::vector<double> st(static_cast<std::size_t>(k), 0.0);
    double last = 0.0;
    for (int j = 0; j + 1 < k; ++j) {
      const double angle = std::sqrt(primes[static_cast<std::size_t>((e + j) % 12)]) * (e + 1);
      st[static_cast<std::size_t>(j)] = angle;
      last -= angle;
    }
    st[static_cast<std::size_t>(k - 1)] = last;
    CMatrix g = CMatrix::Zero(dim, dim);
    for (Eigen::Index a = 0; a < dim; ++a) g(a, a) = std::polar(1.0, eigenvalue(weights[static_cast<std::size_t>(a)], st));
    out.push_back(std::move(g));
  }
  return out;
}

inline constexpr double commutant_threshold = 1e-8;

namespace detail {

inline CMatrix unvec(const CVector& v, Eigen::Index d) {
  return Eigen::Map<const CMatrix>(v.data(), d, d);
}

inline bool is_diagonal(const CMatrix& r) {
  return (r - CMatrix(r.diagonal().asDiagonal())).cwiseAbs().maxCoeff() == 0.0;
}

}  // namespace detail

/// Basis of {X : X R_i = R_i X for all i}: the nullspace of the stacked maps
/// vec X -> (R_i^T (x) I - I (x) R_i) vec X, keeping right singular vectors
/// whose singular value is <= threshold * sigma_max.
inline std::vector<CMatrix> commutant_basis(const std::vector<CMatrix>& reps, double threshold = commutant_threshold) {
  require(!reps.empty(), ErrorCode::invalid_argument, "commutant of an empty family");
  const Eigen::Index d = reps.front().rows();
  for (const auto& r : reps)
    require(r.rows() == d && r.cols() == d, ErrorCode::shape_mismatch, "representation matrices differ in size");
  const Eigen::Index d2 = d * d;

  std::vector<CMatrix> out;
  if (std::all_of(reps.begin(), reps.end(), detail::is_diagonal)) {
    // The stacked map sends E_ab to (R_bb - R_aa) E_ab, so its columns are
    // orthogonal and the SVD is read off column norms.
    RVector sv(d2);
    for (Eigen::Index b = 0; b < d; ++b)
      for (Eigen::Index a = 0; a < d; ++a) {
        double s = 0.0;
        for (const auto& r : reps) s += std::norm(r(b, b) - r(a, a));
        sv(b * d + a) = std::sqrt(s);
      }
    const double cut = threshold * sv.maxCoeff();
    for (Eigen::Index b = 0; b < d; ++b)
      for (Eigen::Index a = 0; a < d; ++a)
        if (sv(b * d + a) <= cut) {
          CMatrix x = CMatrix::Zero(d, d);
          x(a, b) = 1.0;
          out.push_back(std::move(x));
        }
    return out;
  }

  // Sequential intersection: N spans the common nullspace of the maps seen so far.
  double sigma_max = 0.0;
  CMatrix basis = CMatrix::Identity(d2, d2);
  for (const auto& r : reps) {
    if (basis.cols() == 0) break;
    CMatrix image(d2, basis.cols());
    for (Eigen::Index c = 0; c < basis.cols(); ++c) {
      const CMatrix x = detail::unvec(basis.col(c), d);
      const CMatrix y = x * r - r * x;
      image.col(c) = Eigen::Map<const CVector>(y.data(), d2);
    }
    Eigen::BDCSVD<CMatrix> svd(image, Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    if (s.size()) sigma_max = std::max(sigma_max, s(0));
    Eigen::Index rank = 0;
    while (rank < s.size() && s(rank) > threshold * sigma_max) ++rank;
    basis = basis * svd.matrixV().rightCols(basis.cols() - rank);
  }
  for (Eigen::Index c = 0; c < basis.cols(); ++c) out.push_back(detail::unvec(basis.col(c), d));
  return out;
}

struct CommutativityVerdict {
  bool commutative = true;
  double max_relative_commutator = 0.0;
  std::optional<std::pair<std::size_t, std::size_t>> witness;
};

/// All pairwise commutators below 1e-8 relative to the operands' norms.
inline CommutativityVerdict algebra_is_commutative(const std::vector<CMatrix>& basis, double tol = commutant_threshold) {
  require(!basis.empty(), ErrorCode::invalid_argument, "empty algebra basis");
  const Eigen::Index d = basis.front().rows();
  std::vector<double> norms;
  for (const auto& x : basis) {
    require(x.rows() == d && x.cols() == d, ErrorCode::shape_mismatch, "algebra elements differ in size");
    norms.push_back(spectral_norm(x));
  }
  CommutativityVerdict v;
  for (std::size_t i = 0; i < basis.size(); ++i)
    for (std::size_t j = i + 1; j < basis.size(); ++j) {
      const double scale = norms[i] * norms[j];
      if (scale == 0.0) continue;
      const double rel = spectral_norm(basis[i] * basis[j] - basis[j] * basis[i]) / scale;
      if (rel > v.max_relative_commutator) {
        v.max_relative_commutator = rel;
        if (rel >= tol) v.witness = std::make_pair(i, j);
      }
    }
  v.commutative = v.max_relative_commutator < tol;
  return v;
}

}  // namespace bergman
