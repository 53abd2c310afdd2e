#pragma once

// Truncated Toeplitz matrices <phi e_j, e_i>_lambda and commutator norms.

#include "bergman/basis.hpp"
#include "bergman/symbol.hpp"

namespace bergman {

struct Provenance {
  std::string description;  // symbol or group element
  std::string rule_id;
  std::string rule_kind;
  std::uint64_t seed = 0;
};

/// Dense matrix over the ordered orthonormal basis identified by basis_id.
struct OperatorMatrix {
  CMatrix entries;
  std::string basis_id;
  double lambda = 0.0;
  int cutoff = 0;
  std::vector<int> degrees;  // degree of each basis function
  Provenance meta;
  std::vector<CMatrix> replicates;  // jackknife replicates when Monte Carlo entered
  RMatrix std_error;                // entrywise, empty when exact

  Eigen::Index size() const { return entries.rows(); }
  bool stochastic() const { return !replicates.empty(); }

  Eigen::Index prefix_for_degree(int c) const {
    Eigen::Index k = 0;
    while (k < size() && degrees[static_cast<std::size_t>(k)] <= c) ++k;
    return k;
  }
};

inline std::vector<int> basis_degrees(const BasisHandle& b) {
  std::vector<int> out;
  for (const auto& a : b.indices) out.push_back(a.degree());
  return out;
}

inline void require_compatible(const OperatorMatrix& a, const OperatorMatrix& b) {
  require(a.basis_id == b.basis_id, ErrorCode::basis_mismatch,
          "operators live on different bases (" + a.basis_id + " vs " + b.basis_id + ")");
  require(a.size() == b.size(), ErrorCode::shape_mismatch, "operator dimensions differ");
}

enum class Assembly {
  automatic,  // zero the entries the symbol's invariance forces to vanish
  full,       // integrate every entry
};

struct ToeplitzOptions {
  Assembly assembly = Assembly::automatic;
};

namespace detail {

/// Disk rules factor into rings: sum over angles first, one Fourier
/// coefficient per ring and frequency, then sum over radii.
inline CMatrix ring_moments(const BasisHandle& b, const Symbol& phi, const DomainRule& rule, bool diagonal_only) {
  const RingLayout& rings = *rule.rings;
  const int nt = rings.angular_points;
  const auto dim = b.size();
  const auto nmax = static_cast<int>(dim) - 1;
  std::vector<cplx> roots(static_cast<std::size_t>(nt));
  for (int l = 0; l < nt; ++l) roots[static_cast<std::size_t>(l)] = std::polar(1.0, 2.0 * pi * l / nt);

  const int mlo = diagonal_only ? 0 : -nmax;
  const int mhi = diagonal_only ? 0 : nmax;
  std::vector<CompensatedSum<cplx>> acc(static_cast<std::size_t>(dim * dim));
  std::vector<cplx> values(static_cast<std::size_t>(nt));
  std::vector<cplx> coeff(static_cast<std::size_t>(mhi - mlo + 1));
  std::vector<double> rpow(static_cast<std::size_t>(2 * nmax + 1));
  Point z(1, 1);
  for (std::size_t r = 0; r < rings.radii.size(); ++r) {
    const double rho = rings.radii[r];
    for (int l = 0; l < nt; ++l) {
      z(0, 0) = rho * roots[static_cast<std::size_t>(l)];
      const cplx v = phi(z);
      require(std::isfinite(v.real()) && std::isfinite(v.imag()), ErrorCode::non_finite, "symbol is not finite on a ring");
      values[static_cast<std::size_t>(l)] = v;
    }
    // coeff[m] = mean_l phi(rho e^{i theta_l}) e^{i m theta_l}
    for (int m = mlo; m <= mhi; ++m) {
      cplx s = 0.0;
      const int step = ((m % nt) + nt) % nt;
      int idx = 0;
      for (int l = 0; l < nt; ++l) {
        s += values[static_cast<std::size_t>(l)] * roots[static_cast<std::size_t>(idx)];
        idx += step;
        if (idx >= nt) idx -= nt;
      }
      coeff[static_cast<std::size_t>(m - mlo)] = s / static_cast<double>(nt);
    }
    rpow[0] = 1.0;
    for (std::size_t p = 1; p < rpow.size(); ++p) rpow[p] = rpow[p - 1] * rho;
    const double w = rings.radial_weights[r];
    for (int j = 0; j <= nmax; ++j)
      for (int k = 0; k <= nmax; ++k) {
        if (diagonal_only && j != k) continue;
        // <phi z^k, z^j> picks the frequency k - j.
        acc[static_cast<std::size_t>(j * dim + k)].add(w * rpow[static_cast<std::size_t>(j + k)] *
                                                      coeff[static_cast<std::size_t>(k - j - mlo)]);
      }
  }
  CMatrix out = CMatrix::Zero(dim, dim);
  for (Eigen::Index j = 0; j < dim; ++j)
    for (Eigen::Index k = 0; k < dim; ++k) out(j, k) = acc[static_cast<std::size_t>(j * dim + k)].value();
  return out;
}

inline std::vector<int> degree_classes(const BasisHandle& b) { return basis_degrees(b); }

}  // namespace detail

/// entry(i,j) = <phi e_j, e_i>_lambda, i.e. the compression of multiplication
/// by phi to the truncated space (the Bergman projection is absorbed).
inline OperatorMatrix toeplitz_matrix(const BasisHandle& b, const Symbol& phi, const DomainRule& rule,
                                      ToeplitzOptions opt = {}) {
  require(rule.domain.same_shape(b.domain), ErrorCode::shape_mismatch,
          "rule domain " + rule.domain.describe() + " does not match basis domain " + b.domain.describe());
  require(rule.lambda == b.lambda, ErrorCode::invalid_argument, "rule weight does not match basis");
  if (b.stochastic())
    require(rule.id == b.source, ErrorCode::basis_mismatch,
            "Monte Carlo bases must be paired with the rule they were estimated from");
  phi.check_domain(b.domain);
  require(phi.bounded(), ErrorCode::unbounded_symbol, "symbol has no bounding map: " + phi.describe());

  BlockPattern pattern = opt.assembly == Assembly::full ? BlockPattern::full : block_pattern(phi.invariance());
  std::vector<int> classes;
  if (pattern == BlockPattern::weight) classes = b.classes;
  if (pattern == BlockPattern::degree) classes = detail::degree_classes(b);
  const std::vector<int>* cls = pattern == BlockPattern::full ? nullptr : &classes;

  OperatorMatrix out;
  out.basis_id = b.basis_id;
  out.lambda = b.lambda;
  out.cutoff = b.cutoff;
  out.degrees = basis_degrees(b);
  out.meta = {phi.describe(), rule.id, std::string(to_string(rule.kind)), rule.seed};

  if (rule.rings && b.domain.is_disk() && !rule.stochastic()) {
    const CMatrix r = detail::ring_moments(b, phi, rule, pattern != BlockPattern::full);
    out.entries = b.transform.adjoint() * r * b.transform;
    return out;
  }

  const MomentSums sums = accumulate_moments(rule, b.indices, cls, [&](const Point& z) { return phi(z); });
  out.entries = b.transform.adjoint() * sums.estimate() * b.transform;
  if (rule.stochastic()) {
    const auto reps = sums.jackknife();
    for (std::size_t k = 0; k < reps.size(); ++k) {
      const CMatrix& s = b.stochastic() ? b.transform_replicates[k] : b.transform;
      out.replicates.push_back(s.adjoint() * reps[k] * s);
    }
    out.std_error = jackknife_std_error(out.replicates);
  }
  return out;
}

/// Leading block over basis functions of degree <= c.
inline OperatorMatrix compress(const OperatorMatrix& a, int c) {
  const Eigen::Index k = a.prefix_for_degree(c);
  OperatorMatrix out = a;
  out.entries = a.entries.topLeftCorner(k, k);
  out.degrees.resize(static_cast<std::size_t>(k));
  out.cutoff = std::min(a.cutoff, c);
  for (auto& r : out.replicates) r = CMatrix(r.topLeftCorner(k, k));
  if (out.std_error.size()) out.std_error = RMatrix(a.std_error.topLeftCorner(k, k));
  return out;
}

struct CommutatorNorms {
  double spectral = 0.0;
  double frobenius = 0.0;
  /// Frobenius norm of the entrywise jackknife standard errors; zero when exact.
  double std_error = 0.0;
  bool stochastic = false;
  Eigen::Index dim = 0;
};

/// Norms of AB - BA, optionally compressed to basis functions of degree <= c.
/// Compressing a commutator assembled at a larger truncation estimates the
/// corresponding block of the commutator of the untruncated operators.
inline CommutatorNorms commutator_norm(const OperatorMatrix& a, const OperatorMatrix& b,
                                       std::optional<int> compress_degree = std::nullopt) {
  require_compatible(a, b);
  const Eigen::Index k = compress_degree ? a.prefix_for_degree(*compress_degree) : a.size();
  auto comm = [k](const CMatrix& x, const CMatrix& y) -> CMatrix {
    return (x * y - y * x).topLeftCorner(k, k);
  };
  const CMatrix c = comm(a.entries, b.entries);
  CommutatorNorms out;
  out.dim = k;
  out.spectral = spectral_norm(c);
  out.frobenius = c.norm();
  if (a.stochastic() || b.stochastic()) {
    const std::size_t reps = std::max(a.replicates.size(), b.replicates.size());
    if (a.stochastic() && b.stochastic())
      require(a.replicates.size() == b.replicates.size(), ErrorCode::basis_mismatch, "replicate counts differ");
    std::vector<CMatrix> cr;
    for (std::size_t r = 0; r < reps; ++r)
      cr.push_back(comm(a.stochastic() ? a.replicates[r] : a.entries, b.stochastic() ? b.replicates[r] : b.entries));
    out.std_error = jackknife_std_error(cr).norm();
    out.stochastic = true;
  }
  return out;
}

enum class Significance { zero, nonzero, inconclusive };

inline std::string_view to_string(Significance s) {
  switch (s) {
    case Significance::zero: return "zero";
    case Significance::nonzero: return "nonzero";
    case Significance::inconclusive: return "inconclusive";
  }
  return "unknown";
}

/// Stochastic commutators are zero below zero_sigmas standard errors, nonzero
/// above nonzero_sigmas, and inconclusive in between.
inline Significance classify(const CommutatorNorms& c, double zero_sigmas = 3.0, double nonzero_sigmas = 10.0) {
  if (c.spectral <= zero_sigmas * c.std_error) return Significance::zero;
  if (c.spectral > nonzero_sigmas * c.std_error) return Significance::nonzero;
  return Significance::inconclusive;
}

inline double hermitian_defect(const OperatorMatrix& a) { return max_abs(a.entries - a.entries.adjoint()); }

}  // namespace bergman
