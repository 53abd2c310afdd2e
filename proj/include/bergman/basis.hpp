#pragma once

// Orthonormal bases of polynomial truncations of the weighted Bergman space
// H^2_lambda(D): monomial Gram matrices, Cholesky orthonormalization,
// truncated reproducing kernels and the Bergman projection.

#include "bergman/quadrature.hpp"
#include "bergman/weight.hpp"

namespace bergman {

// ---------------------------------------------------------------------------
// Moment accumulation

/// Weighted moment matrices M[a][b] = sum_i w_i f(z_i) conj(z_i^a) z_i^b,
/// accumulated per Monte Carlo batch (one batch for exact rules). When a class
/// vector is given, entries across different classes are never touched.
struct MomentSums {
  std::vector<CMatrix> batch;
  std::vector<double> batch_weight;

  CMatrix total() const {
    CMatrix t = CMatrix::Zero(batch.front().rows(), batch.front().cols());
    for (const auto& b : batch) t += b;
    return t;
  }
  double total_weight() const {
    CompensatedSum<double> s;
    for (double w : batch_weight) s.add(w);
    return s.value();
  }
  /// Normalized full estimate and leave-one-batch-out replicates.
  CMatrix estimate() const { return total() / total_weight(); }
  std::vector<CMatrix> jackknife() const {
    std::vector<CMatrix> out;
    if (batch.size() < 2) return out;
    const CMatrix t = total();
    const double tw = total_weight();
    for (std::size_t b = 0; b < batch.size(); ++b) out.push_back((t - batch[b]) / (tw - batch_weight[b]));
    return out;
  }
};

inline std::vector<std::pair<std::size_t, std::size_t>> rule_batches(const DomainRule& rule) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  if (rule.stochastic() && rule.batch_count() >= 2) {
    for (std::size_t b = 0; b + 1 < rule.batch_offsets.size(); ++b)
      out.emplace_back(rule.batch_offsets[b], rule.batch_offsets[b + 1]);
  } else {
    out.emplace_back(0, rule.nodes.size());
  }
  return out;
}

template <class F>
MomentSums accumulate_moments(const DomainRule& rule, const std::vector<MultiIndex>& indices,
                              const std::vector<int>* classes, F&& factor) {
  const auto dim = static_cast<Eigen::Index>(indices.size());
  int max_deg = 1;
  for (const auto& a : indices) max_deg = std::max(max_deg, a.degree());
  std::vector<std::vector<int>> blocks;
  if (classes) blocks = class_members(*classes);

  MomentSums sums;
  MonomialEvaluator ev(max_deg);
  constexpr std::size_t chunk = 512;
  CMatrix v(static_cast<Eigen::Index>(chunk), dim);
  CVector wf(static_cast<Eigen::Index>(chunk));
  for (auto [begin, end] : rule_batches(rule)) {
    CMatrix acc = CMatrix::Zero(dim, dim);
    CompensatedSum<double> wsum;
    for (std::size_t start = begin; start < end; start += chunk) {
      const std::size_t stop = std::min(end, start + chunk);
      const auto rows = static_cast<Eigen::Index>(stop - start);
      for (std::size_t i = start; i < stop; ++i) {
        const auto r = static_cast<Eigen::Index>(i - start);
        ev.set_point(rule.nodes[i]);
        for (Eigen::Index a = 0; a < dim; ++a) v(r, a) = ev(indices[static_cast<std::size_t>(a)]);
        const cplx f = static_cast<cplx>(factor(rule.nodes[i]));
        require(std::isfinite(f.real()) && std::isfinite(f.imag()), ErrorCode::non_finite,
                "integrand is not finite at node " + std::to_string(i));
        wf(r) = rule.weights[i] * f;
        wsum.add(rule.weights[i]);
      }
      auto vt = v.topRows(rows);
      auto wt = wf.head(rows);
      if (!classes) {
        acc.noalias() += vt.adjoint() * (wt.asDiagonal() * vt);
      } else {
        for (const auto& blk : blocks) {
          const CMatrix vb = vt(Eigen::all, blk);
          acc(blk, blk) += vb.adjoint() * (wt.asDiagonal() * vb);
        }
      }
    }
    sums.batch.push_back(std::move(acc));
    sums.batch_weight.push_back(wsum.value());
  }
  return sums;
}

/// Entrywise jackknife standard error from leave-one-out replicates.
inline RMatrix jackknife_std_error(const std::vector<CMatrix>& replicates) {
  if (replicates.size() < 2) return {};
  const auto b = static_cast<double>(replicates.size());
  CMatrix mean = CMatrix::Zero(replicates.front().rows(), replicates.front().cols());
  for (const auto& r : replicates) mean += r;
  mean /= b;
  RMatrix var = RMatrix::Zero(mean.rows(), mean.cols());
  for (const auto& r : replicates) var += (r - mean).cwiseAbs2();
  return ((b - 1.0) / b * var).cwiseSqrt();
}

// ---------------------------------------------------------------------------
// Monomial norms and Gram matrices

/// ||z^alpha||^2 on a rank-one domain: alpha! Gamma(lambda) / Gamma(|alpha| + lambda).
inline double closed_form_norm2(const Domain& d, double lambda, const MultiIndex& a) {
  require(d.is_ball(), ErrorCode::invalid_argument, "closed-form norms need a rank-one domain");
  check_weight(d, lambda);
  double lg = std::lgamma(lambda) - std::lgamma(a.degree() + lambda);
  for (int e : a.entries) lg += std::lgamma(e + 1.0);
  return std::exp(lg);
}

/// ||z^alpha||^2_lambda. Closed form on rank-one domains; otherwise estimated
/// with the supplied rule (required).
inline Estimate monomial_norm(const Domain& d, double lambda, const MultiIndex& a,
                              const DomainRule* rule = nullptr) {
  check_weight(d, lambda);
  require(a.rows == d.rows() && a.cols == d.cols(), ErrorCode::shape_mismatch, "multi-index shape");
  if (d.is_ball() && rule == nullptr) return {cplx(closed_form_norm2(d, lambda, a), 0.0), 0.0, false};
  require(rule != nullptr, ErrorCode::invalid_argument, "matrix-ball norms need a quadrature rule");
  require(rule->domain.same_shape(d), ErrorCode::shape_mismatch, "rule domain");
  require(rule->lambda == lambda, ErrorCode::invalid_argument, "rule weight does not match");
  Estimate e = integrate(*rule, [&](const Point& z) { return std::norm(monomial(z, a)); });
  e.value = cplx(e.value.real(), 0.0);
  return e;
}

struct GramEstimate {
  CMatrix gram;
  RMatrix std_error;                  // empty for exact evaluation
  std::vector<CMatrix> replicates;    // jackknife replicates (Monte Carlo only)
  std::string source;                 // "closed_form" or the rule id
  bool stochastic = false;
};

/// G[a][b] = <z^b, z^a>_lambda over the graded index list. Entries between
/// different torus weights are exactly zero and never integrated.
inline GramEstimate gram_matrix(const Domain& d, double lambda, int cutoff, const DomainRule* rule = nullptr) {
  check_weight(d, lambda);
  const auto indices = multi_index_enumerate(d, cutoff);
  const auto classes = weight_classes(indices);
  const auto dim = static_cast<Eigen::Index>(indices.size());
  GramEstimate out;
  if (d.is_ball() && rule == nullptr) {
    out.gram = CMatrix::Zero(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i) out.gram(i, i) = closed_form_norm2(d, lambda, indices[static_cast<std::size_t>(i)]);
    out.source = "closed_form";
    return out;
  }
  require(rule != nullptr, ErrorCode::invalid_argument, "matrix-ball Gram matrices need a quadrature rule");
  require(rule->domain.same_shape(d), ErrorCode::shape_mismatch, "rule domain");
  require(rule->lambda == lambda, ErrorCode::invalid_argument, "rule weight does not match");
  const MomentSums sums = accumulate_moments(*rule, indices, &classes, [](const Point&) { return 1.0; });
  auto hermitian = [](CMatrix g) { return CMatrix(0.5 * (g + g.adjoint())); };
  out.gram = hermitian(sums.estimate());
  out.source = rule->id;
  out.stochastic = rule->stochastic();
  if (out.stochastic) {
    for (auto& r : sums.jackknife()) out.replicates.push_back(hermitian(r));
    out.std_error = jackknife_std_error(out.replicates);
  }
  return out;
}

/// Condition number of the Gram matrix after symmetric diagonal scaling to unit
/// diagonal (the scaling is exact, so this is what limits orthonormalization).
inline double scaled_condition(const CMatrix& gram) {
  const RVector d = gram.diagonal().real().cwiseSqrt().cwiseInverse();
  const CMatrix s = d.asDiagonal() * gram * d.asDiagonal();
  Eigen::SelfAdjointEigenSolver<CMatrix> es(s, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  return lo > 0 ? hi / lo : std::numeric_limits<double>::infinity();
}

/// Inverse of the upper Cholesky factor: with G = U* U, returns S = U^{-1},
/// so S* G S = I and S is upper triangular over the graded index order.
inline CMatrix orthonormal_basis(const CMatrix& gram) {
  require(gram.rows() == gram.cols(), ErrorCode::shape_mismatch, "Gram matrix must be square");
  Eigen::LLT<CMatrix> llt(gram);
  require(llt.info() == Eigen::Success, ErrorCode::not_positive_definite, "Cholesky factorization failed");
  const CMatrix upper = llt.matrixU();
  for (Eigen::Index i = 0; i < upper.rows(); ++i)
    require(upper(i, i).real() > 0, ErrorCode::not_positive_definite, "zero pivot in Cholesky factor");
  return upper.triangularView<Eigen::Upper>().solve(CMatrix::Identity(gram.rows(), gram.cols()));
}

// ---------------------------------------------------------------------------
// Basis handle

inline constexpr double max_gram_condition = 1e12;

struct BasisHandle {
  Domain domain = Domain::unit_ball(1);
  double lambda = 0.0;
  int cutoff = 0;
  std::vector<MultiIndex> indices;
  std::vector<int> classes;
  CMatrix gram;
  CMatrix transform;
  std::vector<CMatrix> transform_replicates;
  RMatrix gram_std_error;
  std::string source;  // "closed_form" or the id of the shared Monte Carlo rule
  std::uint64_t seed = 0;
  std::string basis_id;
  double condition = 1.0;

  Eigen::Index size() const { return static_cast<Eigen::Index>(indices.size()); }
  bool stochastic() const { return !transform_replicates.empty(); }

  int degree(Eigen::Index i) const { return indices[static_cast<std::size_t>(i)].degree(); }

  /// Number of leading basis functions of degree <= c.
  Eigen::Index prefix_for_degree(int c) const {
    Eigen::Index k = 0;
    while (k < size() && degree(k) <= c) ++k;
    return k;
  }

  CVector monomials(const Point& z) const {
    MonomialEvaluator ev(std::max(cutoff, 1));
    ev.set_point(z);
    CVector v(size());
    for (Eigen::Index a = 0; a < size(); ++a) v(a) = ev(indices[static_cast<std::size_t>(a)]);
    return v;
  }

  /// (e_0(z), ..., e_{N-1}(z)) with e_j = sum_a S[a][j] z^a.
  CVector evaluate(const Point& z) const { return transform.transpose() * monomials(z); }
};

inline std::string basis_key(const Domain& d, double lambda, int cutoff, const std::string& source, std::uint64_t seed) {
  std::ostringstream os;
  os << "basis|" << d.shape_key() << "|" << exact_text(lambda) << "|" << cutoff << "|" << source << "|" << seed;
  return hex64(fnv1a(os.str()));
}

inline BasisHandle basis_from_gram(const Domain& d, double lambda, int cutoff, GramEstimate g, std::uint64_t seed) {
  BasisHandle b;
  b.domain = d;
  b.lambda = lambda;
  b.cutoff = cutoff;
  b.indices = multi_index_enumerate(d, cutoff);
  b.classes = weight_classes(b.indices);
  b.condition = scaled_condition(g.gram);
  require(b.condition <= max_gram_condition, ErrorCode::ill_conditioned,
          "scaled Gram condition number " + std::to_string(b.condition) + " exceeds 1e12");
  b.transform = orthonormal_basis(g.gram);
  for (const auto& r : g.replicates) b.transform_replicates.push_back(orthonormal_basis(r));
  b.gram = std::move(g.gram);
  b.gram_std_error = std::move(g.std_error);
  b.source = g.source;
  b.seed = seed;
  b.basis_id = basis_key(d, lambda, cutoff, b.source, seed);
  return b;
}

/// Orthonormal basis of polynomials of degree <= cutoff. Rank-one domains use
/// closed-form norms unless a rule is given; matrix balls need the shared
/// Monte Carlo rule that later Toeplitz assemblies must also use.
inline BasisHandle make_basis(const Domain& d, double lambda, int cutoff, const DomainRule* rule = nullptr) {
  require(cutoff >= 0, ErrorCode::invalid_argument, "cutoff must be >= 0");
  GramEstimate g = gram_matrix(d, lambda, cutoff, rule);
  return basis_from_gram(d, lambda, cutoff, std::move(g), rule ? rule->seed : 0);
}

/// Truncated reproducing kernel sum_i e_i(z) conj(e_i(w)).
inline cplx kernel_eval(const BasisHandle& b, const Point& z, const Point& w) {
  require(contains(b.domain, z) && contains(b.domain, w), ErrorCode::outside_domain, "kernel arguments");
  // Eigen's dot conjugates its left operand.
  return b.evaluate(w).dot(b.evaluate(z));
}

/// Coefficients <f, e_i>_lambda of the Bergman projection of f.
template <class F>
CVector bergman_project(const BasisHandle& b, F&& f, const DomainRule& rule) {
  require(rule.domain.same_shape(b.domain), ErrorCode::shape_mismatch, "rule domain");
  require(rule.lambda == b.lambda, ErrorCode::invalid_argument, "rule weight does not match basis");
  std::vector<CompensatedSum<cplx>> acc(static_cast<std::size_t>(b.size()));
  CompensatedSum<double> wsum;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const cplx fv = static_cast<cplx>(f(rule.nodes[i]));
    require(std::isfinite(fv.real()) && std::isfinite(fv.imag()), ErrorCode::non_finite,
            "function is not finite at node " + std::to_string(i));
    const CVector e = b.evaluate(rule.nodes[i]);
    for (Eigen::Index k = 0; k < b.size(); ++k) acc[static_cast<std::size_t>(k)].add(rule.weights[i] * fv * std::conj(e(k)));
    wsum.add(rule.weights[i]);
  }
  CVector out(b.size());
  for (Eigen::Index k = 0; k < b.size(); ++k) out(k) = acc[static_cast<std::size_t>(k)].value() / wsum.value();
  return out;
}

}  // namespace bergman
