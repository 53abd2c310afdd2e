#pragma once

// SU(n,m) acting on D_{n,m} by fractional-linear maps, and the holomorphic
// discrete series pi_lambda restricted to truncated polynomial spaces.

#include "bergman/toeplitz.hpp"

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

namespace bergman {

inline constexpr double membership_tolerance = 1e-10;

struct OneParameterPath {
  CMatrix generator;  // X with element = exp(time X)
  double time = 0.0;
};

inline CMatrix signature_matrix(int n, int m) {
  CMatrix j = CMatrix::Identity(n + m, n + m);
  j.bottomRightCorner(m, m) *= -1.0;
  return j;
}

/// max(|g* J g - J|, |det g - 1|)
inline double membership_defect(const CMatrix& g, int n, int m) {
  require(g.rows() == n + m && g.cols() == n + m, ErrorCode::shape_mismatch, "group element size");
  const CMatrix j = signature_matrix(n, m);
  return std::max(max_abs(g.adjoint() * j * g - j), std::abs(g.determinant() - 1.0));
}

class GroupElement {
 public:
  static GroupElement identity(int n, int m) {
    return from_path(n, m, CMatrix::Zero(n + m, n + m), 0.0);
  }

  /// Element without a path; integer powers of the Jacobian only.
  static GroupElement from_matrix(int n, int m, CMatrix g) {
    GroupElement e(n, m);
    e.matrix_ = std::move(g);
    e.check();
    return e;
  }

  static GroupElement from_path(int n, int m, CMatrix x, double t) {
    require(x.rows() == n + m && x.cols() == n + m, ErrorCode::shape_mismatch, "generator size");
    GroupElement e(n, m);
    e.matrix_ = (t * x).exp();
    e.path_ = OneParameterPath{std::move(x), t};
    e.check();
    return e;
  }

  int n() const { return n_; }
  int m() const { return m_; }
  const CMatrix& matrix() const { return matrix_; }
  const std::optional<OneParameterPath>& path() const { return path_; }
  double membership_defect() const { return defect_; }

  auto a() const { return matrix_.topLeftCorner(n_, n_); }
  auto b() const { return matrix_.topRightCorner(n_, m_); }
  auto c() const { return matrix_.bottomLeftCorner(m_, n_); }
  auto d() const { return matrix_.bottomRightCorner(m_, m_); }

  /// g^{-1} = J g* J, with the path reversed.
  GroupElement inverse() const {
    GroupElement e(n_, m_);
    const CMatrix j = signature_matrix(n_, m_);
    e.matrix_ = j * matrix_.adjoint() * j;
    if (path_) e.path_ = OneParameterPath{path_->generator, -path_->time};
    e.defect_ = bergman::membership_defect(e.matrix_, n_, m_);
    return e;
  }

  /// Products keep a path only along a common generator.
  GroupElement operator*(const GroupElement& o) const {
    require(n_ == o.n_ && m_ == o.m_, ErrorCode::shape_mismatch, "group elements of different groups");
    GroupElement e(n_, m_);
    e.matrix_ = matrix_ * o.matrix_;
    if (path_ && o.path_ && path_->generator == o.path_->generator)
      e.path_ = OneParameterPath{path_->generator, path_->time + o.path_->time};
    e.defect_ = bergman::membership_defect(e.matrix_, n_, m_);
    return e;
  }

  /// Block diagonal, i.e. in S(U(n) x U(m)).
  bool in_maximal_compact(double tol = 1e-12) const { return max_abs(b()) <= tol && max_abs(c()) <= tol; }

  std::string describe() const {
    std::ostringstream os;
    os.precision(17);
    os << "SU(" << n_ << "," << m_ << ")";
    if (path_) os << " exp(" << path_->time << " X)";
    os << " defect " << defect_;
    return os.str();
  }

 private:
  GroupElement(int n, int m) : n_(n), m_(m) {
    require(n >= 1 && m >= 1, ErrorCode::invalid_argument, "SU(n,m) needs n, m >= 1");
  }
  void check() {
    defect_ = bergman::membership_defect(matrix_, n_, m_);
    require(defect_ < membership_tolerance, ErrorCode::not_in_group,
            "element leaves SU(" + std::to_string(n_) + "," + std::to_string(m_) + "), defect " + std::to_string(defect_));
  }

  int n_;
  int m_;
  CMatrix matrix_;
  std::optional<OneParameterPath> path_;
  double defect_ = 0.0;
};

inline void check_action(const GroupElement& g, const Domain& d) {
  require(g.n() == d.rows() && g.m() == d.cols(), ErrorCode::shape_mismatch,
          "element of SU(" + std::to_string(g.n()) + "," + std::to_string(g.m()) + ") acting on " + d.describe());
}

inline Eigen::PartialPivLU<CMatrix> denominator(const GroupElement& g, const Point& z) {
  const CMatrix den = g.c() * z + g.d();
  Eigen::PartialPivLU<CMatrix> lu(den);
  require(lu.rcond() > 1e-14, ErrorCode::singular_block, "CZ + D is numerically singular");
  return lu;
}

/// N Q^{-1} from an LU factorization of Q.
inline CMatrix right_divide(const Eigen::PartialPivLU<CMatrix>& lu, const CMatrix& num) { return num * lu.inverse(); }

/// (AZ + B)(CZ + D)^{-1}
inline Point mobius_apply(const GroupElement& g, const Domain& d, const Point& z) {
  check_action(g, d);
  require(contains(d, z), ErrorCode::outside_domain, "Mobius argument outside " + d.describe());
  const auto lu = denominator(g, z);
  const CMatrix num = g.a() * z + g.b();
  const Point w = right_divide(lu, num);
  require(contains(d, w), ErrorCode::outside_domain, "Mobius image left the domain");
  return w;
}

/// det(CZ + D)^{-(n+m)}, the complex Jacobian of z -> g.z.
inline cplx jacobian_factor(const GroupElement& g, const Domain& d, const Point& z) {
  check_action(g, d);
  require(contains(d, z), ErrorCode::outside_domain, "Jacobian argument outside " + d.describe());
  const cplx det = denominator(g, z).determinant();
  cplx out = 1.0;
  for (int k = 0; k < d.genus(); ++k) out /= det;
  return out;
}

struct PkpFactors {
  CMatrix p_plus;   // n x m
  CMatrix k_upper;  // n x n
  CMatrix k_lower;  // m x m
  CMatrix p_minus;  // m x n

  /// [[I, p+], [0, I]] diag(k_upper, k_lower) [[I, 0], [p-, I]]
  CMatrix reassemble() const {
    const auto n = k_upper.rows();
    const auto m = k_lower.rows();
    CMatrix up = CMatrix::Identity(n + m, n + m);
    up.topRightCorner(n, m) = p_plus;
    CMatrix mid = CMatrix::Zero(n + m, n + m);
    mid.topLeftCorner(n, n) = k_upper;
    mid.bottomRightCorner(m, m) = k_lower;
    CMatrix lo = CMatrix::Identity(n + m, n + m);
    lo.bottomLeftCorner(m, n) = p_minus;
    return up * mid * lo;
  }
};

inline PkpFactors pkp_factorize(const CMatrix& g, int n, int m) {
  require(g.rows() == n + m && g.cols() == n + m, ErrorCode::shape_mismatch, "block matrix size");
  const CMatrix dblk = g.bottomRightCorner(m, m);
  Eigen::PartialPivLU<CMatrix> lu(dblk);
  require(lu.rcond() > 1e-14, ErrorCode::singular_block, "D block is singular");
  const CMatrix dinv = lu.inverse();
  PkpFactors f;
  f.p_plus = g.topRightCorner(n, m) * dinv;
  f.p_minus = dinv * g.bottomLeftCorner(m, n);
  f.k_upper = g.topLeftCorner(n, n) - f.p_plus * g.bottomLeftCorner(m, n);
  f.k_lower = dblk;
  return f;
}

// ---------------------------------------------------------------------------
// Fractional powers of the Jacobian along paths

inline constexpr int max_phase_steps = 1 << 16;

/// exp(s_k X) on s_k = k t / steps, k = 0..steps.
class PathGrid {
 public:
  PathGrid(const OneParameterPath& path, int n, int m, int steps) : n_(n), m_(m) {
    const CMatrix step = (path.time / steps * path.generator).exp();
    CMatrix cur = CMatrix::Identity(n + m, n + m);
    const CMatrix end = (path.time * path.generator).exp();
    for (int k = 0; k <= steps; ++k) {
      if (k == steps) cur = end;
      c_.push_back(cur.bottomLeftCorner(m, n));
      d_.push_back(cur.bottomRightCorner(m, m));
      cur = cur * step;
    }
  }

  int steps() const { return static_cast<int>(c_.size()) - 1; }

  /// log det(C_s Z + D_s) continued from 0 at s = 0; nullopt when some step
  /// moves the argument of j by pi/4 or more.
  std::optional<cplx> log_det(const Point& z) const {
    const double limit = pi / 4 / (n_ + m_);
    cplx prev = 1.0;
    cplx acc = 0.0;
    for (std::size_t k = 1; k < c_.size(); ++k) {
      const cplx det = (c_[k] * z + d_[k]).determinant();
      if (!(std::abs(det) > 0.0)) return std::nullopt;
      const cplx inc = std::log(det / prev);
      if (std::abs(inc.imag()) >= limit) return std::nullopt;
      acc += inc;
      prev = det;
    }
    return acc;
  }

 private:
  int n_;
  int m_;
  std::vector<CMatrix> c_;
  std::vector<CMatrix> d_;
};

/// j(g, z)^(lambda/p) for every z in `points`, with the branch fixed by
/// continuation along the element's path. Integer lambda/p needs no path.
inline std::vector<cplx> jacobian_power(const GroupElement& g, const Domain& d, double lambda,
                                        const std::vector<Point>& points) {
  check_action(g, d);
  std::vector<cplx> out(points.size());
  const double e = lambda / d.genus();
  if (e == std::floor(e) && !g.path()) {
    for (std::size_t i = 0; i < points.size(); ++i) out[i] = std::pow(jacobian_factor(g, d, points[i]), static_cast<int>(e));
    return out;
  }
  require(g.path().has_value(), ErrorCode::phase_tracking, "fractional powers need a one-parameter path");
  for (int steps = 8; steps <= max_phase_steps; steps *= 2) {
    const PathGrid grid(*g.path(), d.rows(), d.cols(), steps);
    bool ok = true;
    for (std::size_t i = 0; i < points.size() && ok; ++i) {
      const auto l = grid.log_det(points[i]);
      if (!l) {
        ok = false;
        break;
      }
      // j^(lambda/p) = det^(-lambda)
      out[i] = std::exp(-lambda * *l);
    }
    if (ok) return out;
  }
  fail(ErrorCode::phase_tracking, "phase increments stayed above pi/4 after " + std::to_string(max_phase_steps) + " steps");
}

// ---------------------------------------------------------------------------
// Truncated representation matrices

struct PiOptions {
  /// Reject elements outside S(U(n) x U(m)); only those preserve degree.
  bool require_exact = true;
};

/// Matrix of f -> j(g^{-1}, .)^(lambda/p) f(g^{-1} .) in the orthonormal basis.
inline OperatorMatrix pi_lambda_matrix(const BasisHandle& b, const GroupElement& g, const DomainRule& rule,
                                       PiOptions opt = {}) {
  check_action(g, b.domain);
  require(rule.domain.same_shape(b.domain), ErrorCode::shape_mismatch, "rule domain");
  require(rule.lambda == b.lambda, ErrorCode::invalid_argument, "rule weight does not match basis");
  if (b.stochastic())
    require(rule.id == b.source, ErrorCode::basis_mismatch, "Monte Carlo bases must share their rule");
  if (opt.require_exact)
    require(g.in_maximal_compact(), ErrorCode::non_compact,
            "non-compact elements do not preserve the truncated space");

  const GroupElement ginv = g.inverse();
  const auto jpow = jacobian_power(ginv, b.domain, b.lambda, rule.nodes);
  const auto dim = b.size();
  MonomialEvaluator ev(std::max(b.cutoff, 1));

  MomentSums sums;
  CVector v(dim);
  CVector u(dim);
  for (auto [begin, end] : rule_batches(rule)) {
    CMatrix acc = CMatrix::Zero(dim, dim);
    CompensatedSum<double> wsum;
    for (std::size_t i = begin; i < end; ++i) {
      const Point& z = rule.nodes[i];
      ev.set_point(z);
      for (Eigen::Index a = 0; a < dim; ++a) v(a) = ev(b.indices[static_cast<std::size_t>(a)]);
      const auto lu = denominator(ginv, z);
      const CMatrix num = ginv.a() * z + ginv.b();
      const Point w = right_divide(lu, num);
      ev.set_point(w);
      for (Eigen::Index a = 0; a < dim; ++a) u(a) = jpow[i] * ev(b.indices[static_cast<std::size_t>(a)]);
      // R(alpha, beta) = sum w conj(z^alpha) J (g^{-1} z)^beta
      acc.noalias() += rule.weights[i] * (v.conjugate() * u.transpose());
      wsum.add(rule.weights[i]);
    }
    sums.batch.push_back(std::move(acc));
    sums.batch_weight.push_back(wsum.value());
  }

  OperatorMatrix out;
  out.basis_id = b.basis_id;
  out.lambda = b.lambda;
  out.cutoff = b.cutoff;
  out.degrees = basis_degrees(b);
  out.meta = {g.describe(), rule.id, std::string(to_string(rule.kind)), rule.seed};
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

/// phi_h(z) = phi(h^{-1} z)
inline Symbol translate_symbol(const Symbol& phi, const GroupElement& h, const Domain& d) {
  check_action(h, d);
  const GroupElement hinv = h.inverse();
  const Invariance inv = h.in_maximal_compact() ? phi.invariance() : Invariance::none;
  return Symbol::oracle(
      [phi, hinv, d](const Point& z) {
        const auto lu = denominator(hinv, z);
        const CMatrix num = hinv.a() * z + hinv.b();
        return phi(Point(right_divide(lu, num)));
      },
      inv, phi.esssup_bound(d), phi.real_valued(), phi.describe() + "@" + h.describe());
}

/// Spectral norm of pi(h) T_phi - T_{phi_h} pi(h).
inline double intertwine_defect(const BasisHandle& b, const GroupElement& h, const Symbol& phi, const DomainRule& rule) {
  const OperatorMatrix p = pi_lambda_matrix(b, h, rule);
  const OperatorMatrix t = toeplitz_matrix(b, phi, rule, {Assembly::full});
  const OperatorMatrix th = toeplitz_matrix(b, translate_symbol(phi, h, b.domain), rule, {Assembly::full});
  return spectral_norm(p.entries * t.entries - th.entries * p.entries);
}

// ---------------------------------------------------------------------------
// Subgroups

enum class SubgroupKind { torus, maximal_compact, rotation, hyperbolic, parabolic, real_form };

inline std::string_view to_string(SubgroupKind k) {
  switch (k) {
    case SubgroupKind::torus: return "torus";
    case SubgroupKind::maximal_compact: return "maximal_compact";
    case SubgroupKind::rotation: return "rotation";
    case SubgroupKind::hyperbolic: return "hyperbolic";
    case SubgroupKind::parabolic: return "parabolic";
    case SubgroupKind::real_form: return "real_form";
  }
  return "unknown";
}

struct GroupRule {
  std::vector<GroupElement> elements;
  std::vector<double> weights;
  bool exact = false;  // grid rules integrate trigonometric polynomials exactly
  std::string description;
};

class Subgroup {
 public:
  static Subgroup torus(int n, int m) { return Subgroup(SubgroupKind::torus, n, m); }
  static Subgroup maximal_compact(int n, int m) { return Subgroup(SubgroupKind::maximal_compact, n, m); }
  /// Center of K: Z -> e^{i theta} Z.
  static Subgroup rotation(int n = 1, int m = 1) { return Subgroup(SubgroupKind::rotation, n, m); }
  static Subgroup hyperbolic() { return Subgroup(SubgroupKind::hyperbolic, 1, 1); }
  static Subgroup parabolic() { return Subgroup(SubgroupKind::parabolic, 1, 1); }
  static Subgroup real_form(int n) { return Subgroup(SubgroupKind::real_form, n, 1); }

  SubgroupKind kind() const { return kind_; }
  int n() const { return n_; }
  int m() const { return m_; }

  bool compact() const {
    return kind_ == SubgroupKind::torus || kind_ == SubgroupKind::maximal_compact || kind_ == SubgroupKind::rotation;
  }

  Invariance invariance() const {
    switch (kind_) {
      case SubgroupKind::torus: return Invariance::torus;
      case SubgroupKind::maximal_compact: return Invariance::maximal_compact;
      case SubgroupKind::rotation: return Invariance::rotation;
      case SubgroupKind::hyperbolic: return Invariance::hyperbolic;
      case SubgroupKind::parabolic: return Invariance::parabolic;
      case SubgroupKind::real_form: return Invariance::real_form;
    }
    return Invariance::none;
  }

  int dimension() const {
    switch (kind_) {
      case SubgroupKind::torus: return n_ + m_ - 1;
      case SubgroupKind::maximal_compact: return n_ * n_ + m_ * m_ - 1;
      case SubgroupKind::real_form: return n_ * (n_ + 1) / 2;
      default: return 1;
    }
  }

  std::string describe() const {
    return std::string(to_string(kind_)) + "(" + std::to_string(n_) + "," + std::to_string(m_) + ")";
  }

  /// One-parameter coordinates: torus angles (n+m-1 of them), rotation angle,
  /// or the flow time of the hyperbolic and parabolic generators.
  GroupElement element(const std::vector<double>& params) const {
    const int k = n_ + m_;
    switch (kind_) {
      case SubgroupKind::torus: {
        require(static_cast<int>(params.size()) == k - 1, ErrorCode::invalid_argument, "torus needs n+m-1 angles");
        CMatrix x = CMatrix::Zero(k, k);
        double last = 0.0;
        for (int j = 0; j + 1 < k; ++j) {
          x(j, j) = cplx(0.0, params[static_cast<std::size_t>(j)]);
          last -= params[static_cast<std::size_t>(j)];
        }
        x(k - 1, k - 1) = cplx(0.0, last);
        return GroupElement::from_path(n_, m_, x, 1.0);
      }
      case SubgroupKind::rotation: {
        require(params.size() == 1, ErrorCode::invalid_argument, "rotation needs one angle");
        CMatrix x = CMatrix::Zero(k, k);
        for (int j = 0; j < n_; ++j) x(j, j) = cplx(0.0, static_cast<double>(m_) / k);
        for (int j = n_; j < k; ++j) x(j, j) = cplx(0.0, -static_cast<double>(n_) / k);
        return GroupElement::from_path(n_, m_, x, params[0]);
      }
      case SubgroupKind::hyperbolic: {
        require(params.size() == 1, ErrorCode::invalid_argument, "hyperbolic flow needs one time");
        CMatrix x(2, 2);
        x << 0.0, 1.0, 1.0, 0.0;
        return GroupElement::from_path(1, 1, x, params[0]);
      }
      case SubgroupKind::parabolic: {
        require(params.size() == 1, ErrorCode::invalid_argument, "parabolic flow needs one time");
        CMatrix x(2, 2);
        x << cplx(0, 1), cplx(0, -1), cplx(0, 1), cplx(0, -1);
        return GroupElement::from_path(1, 1, x, params[0]);
      }
      default:
        fail(ErrorCode::invalid_argument, describe() + " has no coordinate chart; use sample()");
    }
  }

  /// Random elements. Compact groups are sampled from Haar measure; the
  /// real form by exponentials of Gaussian Lie algebra elements.
  std::vector<GroupElement> sample(std::size_t count, std::uint64_t seed, double scale = 1.0) const {
    std::vector<GroupElement> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
      CounterStream s(seed, i);
      switch (kind_) {
        case SubgroupKind::torus: {
          std::vector<double> a(static_cast<std::size_t>(n_ + m_ - 1));
          for (auto& x : a) x = 2.0 * pi * s.uniform();
          out.push_back(element(a));
          break;
        }
        case SubgroupKind::rotation: out.push_back(element({2.0 * pi * s.uniform()})); break;
        case SubgroupKind::hyperbolic:
        case SubgroupKind::parabolic: out.push_back(element({scale * s.normal()})); break;
        case SubgroupKind::maximal_compact: out.push_back(haar_compact(s)); break;
        case SubgroupKind::real_form: out.push_back(real_form_element(s, scale)); break;
      }
    }
    return out;
  }

  /// Equal-weight product grid; exact for trigonometric polynomials of
  /// per-angle degree < points.
  GroupRule grid(int points) const {
    require(points >= 1, ErrorCode::invalid_argument, "grid needs at least one point");
    GroupRule rule;
    rule.exact = true;
    rule.description = describe() + "|grid|" + std::to_string(points);
    if (kind_ == SubgroupKind::rotation) {
      for (int l = 0; l < points; ++l) {
        rule.elements.push_back(element({2.0 * pi * l / points}));
        rule.weights.push_back(1.0 / points);
      }
      return rule;
    }
    require(kind_ == SubgroupKind::torus, ErrorCode::non_compact, describe() + " has no grid rule");
    const TorusRule t = torus_rule(n_ + m_ - 1, points);
    for (std::size_t q = 0; q < t.nodes.size(); ++q) {
      rule.elements.push_back(element(t.nodes[q]));
      rule.weights.push_back(t.weights[q]);
    }
    return rule;
  }

  /// Haar Monte Carlo rule for compact subgroups.
  GroupRule sample_rule(std::size_t count, std::uint64_t seed) const {
    require(compact(), ErrorCode::non_compact, describe() + " is not compact");
    GroupRule rule;
    rule.elements = sample(count, seed);
    rule.weights.assign(count, 1.0 / static_cast<double>(count));
    rule.description = describe() + "|haar|" + std::to_string(count) + "|" + std::to_string(seed);
    return rule;
  }

 private:
  Subgroup(SubgroupKind k, int n, int m) : kind_(k), n_(n), m_(m) {
    require(n >= 1 && m >= 1, ErrorCode::invalid_argument, "subgroup of SU(n,m) needs n, m >= 1");
    if (k == SubgroupKind::hyperbolic || k == SubgroupKind::parabolic)
      require(n == 1 && m == 1, ErrorCode::invalid_argument, "hyperbolic and parabolic subgroups live in SU(1,1)");
    if (k == SubgroupKind::real_form) require(m == 1, ErrorCode::invalid_argument, "real form SO_0(n,1) needs m = 1");
  }

  static CMatrix haar_unitary(CounterStream& s, int k) {
    CMatrix g(k, k);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) g(i, j) = cplx(s.normal(), s.normal());
    Eigen::HouseholderQR<CMatrix> qr(g);
    CMatrix q = qr.householderQ();
    const CMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < k; ++j) q.col(j) *= r(j, j) / std::abs(r(j, j));
    return q;
  }

  /// Skew-Hermitian logarithm of a unitary matrix.
  static CMatrix unitary_log(const CMatrix& u) {
    Eigen::ComplexEigenSolver<CMatrix> es(u);
    require(es.info() == Eigen::Success, ErrorCode::non_finite, "eigensolver failed");
    CVector l(u.rows());
    for (Eigen::Index i = 0; i < l.size(); ++i) l(i) = cplx(0.0, std::arg(es.eigenvalues()(i)));
    return es.eigenvectors() * l.asDiagonal() * es.eigenvectors().inverse();
  }

  // (U, V) Haar on U(n) x U(m), then a central correction lands in
  // S(U(n) x U(m)) with a traceless generator.
  GroupElement haar_compact(CounterStream& s) const {
    const int k = n_ + m_;
    CMatrix x = CMatrix::Zero(k, k);
    x.topLeftCorner(n_, n_) = unitary_log(haar_unitary(s, n_));
    x.bottomRightCorner(m_, m_) = unitary_log(haar_unitary(s, m_));
    x -= (x.trace() / static_cast<double>(k)) * CMatrix::Identity(k, k);
    x = 0.5 * (x - x.adjoint());
    return GroupElement::from_path(n_, m_, x, 1.0);
  }

  // so(n,1): [[A, b], [b^T, 0]] with A real antisymmetric.
  GroupElement real_form_element(CounterStream& s, double scale) const {
    const int k = n_ + 1;
    CMatrix x = CMatrix::Zero(k, k);
    for (int i = 0; i < n_; ++i)
      for (int j = i + 1; j < n_; ++j) {
        const double v = scale * s.normal();
        x(i, j) = v;
        x(j, i) = -v;
      }
    for (int i = 0; i < n_; ++i) {
      const double v = scale * s.normal();
      x(i, n_) = v;
      x(n_, i) = v;
    }
    return GroupElement::from_path(n_, 1, x, 1.0);
  }

  SubgroupKind kind_;
  int n_;
  int m_;
};

/// Subgroup whose orbits a declared invariance refers to.
inline std::optional<Subgroup> invariance_subgroup(Invariance inv, const Domain& d) {
  switch (inv) {
    case Invariance::rotation: return Subgroup::rotation(d.rows(), d.cols());
    case Invariance::torus: return Subgroup::torus(d.rows(), d.cols());
    case Invariance::maximal_compact: return Subgroup::maximal_compact(d.rows(), d.cols());
    case Invariance::hyperbolic: return Subgroup::hyperbolic();
    case Invariance::parabolic: return Subgroup::parabolic();
    case Invariance::real_form: return Subgroup::real_form(d.rows());
    default: return std::nullopt;
  }
}

/// Random point with operator norm below max_norm.
inline Point random_point(const Domain& d, CounterStream& s, double max_norm = 0.9) {
  Point z(d.rows(), d.cols());
  for (Eigen::Index i = 0; i < z.rows(); ++i)
    for (Eigen::Index j = 0; j < z.cols(); ++j) z(i, j) = cplx(s.normal(), s.normal());
  return z * (max_norm * std::pow(s.uniform(), 1.0 / (2.0 * d.dim())) / operator_norm(z));
}

struct SpotCheck {
  double max_defect = 0.0;
  double max_membership_defect = 0.0;
  std::size_t evaluations = 0;
  bool pass = false;
};

/// max |phi(h.z) - phi(z)| over sampled h in the declared group and sampled z.
inline SpotCheck invariance_spot_check(const Symbol& phi, const Domain& d, std::size_t elements, std::size_t points,
                                       std::uint64_t seed, double tol = 1e-9) {
  const auto group = invariance_subgroup(phi.invariance(), d);
  require(group.has_value(), ErrorCode::invalid_argument, "symbol declares no invariance: " + phi.describe());
  SpotCheck out;
  const auto hs = group->sample(elements, seed, 0.5);
  CounterStream ps(seed, 0xA5A5A5A5ULL);
  std::vector<Point> zs;
  for (std::size_t i = 0; i < points; ++i) zs.push_back(random_point(d, ps, 0.85));
  for (const auto& h : hs) {
    out.max_membership_defect = std::max(out.max_membership_defect, h.membership_defect());
    for (const auto& z : zs) {
      const Point hz = mobius_apply(h, d, z);
      out.max_defect = std::max(out.max_defect, std::abs(phi(hz) - phi(z)));
      ++out.evaluations;
    }
  }
  out.pass = out.max_defect < tol && out.max_membership_defect < membership_tolerance;
  return out;
}

// ---------------------------------------------------------------------------
// Averaging over compact subgroups

/// phi_hat(z) = sum_h w_h phi(h^{-1} z)
inline Symbol average_symbol(const Subgroup& group, const Symbol& phi, const GroupRule& rule, const Domain& d) {
  require(group.compact(), ErrorCode::non_compact, group.describe() + " is not compact");
  std::vector<GroupElement> inv;
  for (const auto& h : rule.elements) {
    check_action(h, d);
    inv.push_back(h.inverse());
  }
  const std::vector<double> w = rule.weights;
  return Symbol::oracle(
      [phi, inv, w](const Point& z) {
        CompensatedSum<cplx> acc;
        for (std::size_t i = 0; i < inv.size(); ++i) {
          const auto lu = denominator(inv[i], z);
          const CMatrix num = inv[i].a() * z + inv[i].b();
          acc.add(w[i] * phi(Point(right_divide(lu, num))));
        }
        return acc.value();
      },
      group.invariance(), phi.esssup_bound(d), phi.real_valued(), "avg[" + rule.description + "]:" + phi.describe());
}

/// T_hat = sum_h w_h pi(h) T pi(h)^{-1}
inline OperatorMatrix average_operator(const Subgroup& group, const BasisHandle& b, const OperatorMatrix& t,
                                       const GroupRule& rule, const DomainRule& space_rule) {
  require(group.compact(), ErrorCode::non_compact, group.describe() + " is not compact");
  require(t.basis_id == b.basis_id, ErrorCode::basis_mismatch, "operator does not live on this basis");
  OperatorMatrix out = t;
  out.entries.setZero();
  out.replicates.clear();
  out.std_error = RMatrix();
  for (std::size_t i = 0; i < rule.elements.size(); ++i) {
    const CMatrix p = pi_lambda_matrix(b, rule.elements[i], space_rule).entries;
    const CMatrix pinv = pi_lambda_matrix(b, rule.elements[i].inverse(), space_rule).entries;
    out.entries += rule.weights[i] * (p * t.entries * pinv);
  }
  out.meta.description = "avg[" + rule.description + "]:" + t.meta.description;
  return out;
}

}  // namespace bergman
