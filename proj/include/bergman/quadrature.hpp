#pragma once

// Integration over (D, mu_lambda) and over compact tori.
//
// Radial rules are products of Gauss-Jacobi rules (stick-breaking
// coordinates for |z_j|^2) and uniform angular grids; they integrate every
// polynomial in z, conj(z) of total degree <= 2 k_max exactly. Monte Carlo
// rules are self-normalized importance samples drawn from a Frobenius ball by
// rejection.

#include "bergman/domain.hpp"

#include <optional>
#include <utility>

namespace bergman {

enum class RuleKind { radial_angular, monte_carlo, torus_grid, haar_sample };

inline std::string_view to_string(RuleKind k) {
  switch (k) {
    case RuleKind::radial_angular: return "radial_angular";
    case RuleKind::monte_carlo: return "monte_carlo";
    case RuleKind::torus_grid: return "torus_grid";
    case RuleKind::haar_sample: return "haar_sample";
  }
  return "unknown";
}

template <class Node>
struct QuadratureRule {
  RuleKind kind = RuleKind::radial_angular;
  std::vector<Node> nodes;
  /// Normalized weights (sum to one up to rounding).
  std::vector<double> weights;
  /// Polynomial exactness (total degree in z, conj z); empty for stochastic rules.
  std::optional<int> exactness_degree;
  std::uint64_t seed = 0;
  /// Content hash of (kind, parameters, seed).
  std::string id;
  std::string description;

  // Monte Carlo bookkeeping.
  std::vector<std::size_t> batch_offsets;  // contiguous batches for jackknife replicates
  std::size_t proposals = 0;
  double raw_weight_sum = 0.0;

  bool stochastic() const { return !exactness_degree.has_value(); }
  std::size_t size() const { return nodes.size(); }
  std::size_t batch_count() const { return batch_offsets.empty() ? 0 : batch_offsets.size() - 1; }
  double acceptance_rate() const {
    return proposals ? static_cast<double>(nodes.size()) / static_cast<double>(proposals) : 1.0;
  }
  double effective_sample_size() const {
    CompensatedSum<double> s2;
    for (double w : weights) s2.add(w * w);
    CompensatedSum<double> s1;
    for (double w : weights) s1.add(w);
    return s1.value() * s1.value() / s2.value();
  }
};

/// Ring structure of a disk rule: nodes are laid out radius-major with
/// `angular_points` equispaced angles per radius starting at angle 0.
struct RingLayout {
  std::vector<double> radii;
  std::vector<double> radial_weights;  // sum to one
  int angular_points = 0;
};

struct DomainRule : QuadratureRule<Point> {
  Domain domain = Domain::unit_ball(1);
  double lambda = 0.0;
  std::optional<RingLayout> rings;
};

using Angles = std::vector<double>;
using TorusRule = QuadratureRule<Angles>;

struct Estimate {
  cplx value{};
  double std_error = 0.0;
  bool stochastic = false;
};

// ---------------------------------------------------------------------------
// Gauss-Jacobi

struct GaussRule1D {
  std::vector<double> nodes;
  std::vector<double> weights;  // normalized to sum one
};

/// Gauss rule on [0,1] for the probability weight proportional to
/// t^(a-1) (1-t)^(b-1), a, b > 0, via Golub-Welsch on the Jacobi matrix.
inline GaussRule1D beta_gauss_rule(int count, double a, double b) {
  require(count >= 1, ErrorCode::invalid_argument, "Gauss rule needs at least one node");
  require(a > 0 && b > 0, ErrorCode::invalid_argument, "Beta parameters must be positive");
  // Jacobi weight (1-x)^ja (1+x)^jb on [-1,1] with x = 2t - 1.
  const double ja = b - 1.0;
  const double jb = a - 1.0;
  const double s = ja + jb;
  RVector diag(count);
  RVector sub(std::max(count - 1, 0));
  for (int k = 0; k < count; ++k) {
    if (k == 0)
      diag(k) = (jb - ja) / (s + 2.0);
    else
      diag(k) = (jb * jb - ja * ja) / ((2.0 * k + s) * (2.0 * k + s + 2.0));
    if (k + 1 < count) {
      const double kk = k + 1.0;
      const double den = (2.0 * kk + s);
      const double beta = 4.0 * kk * (kk + ja) * (kk + jb) * (kk + s) /
                          (den * den * (den + 1.0) * (den - 1.0));
      sub(k) = std::sqrt(beta);
    }
  }
  Eigen::SelfAdjointEigenSolver<RMatrix> es;
  es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  require(es.info() == Eigen::Success, ErrorCode::non_finite, "Golub-Welsch eigensolver failed");
  GaussRule1D out;
  out.nodes.resize(static_cast<std::size_t>(count));
  out.weights.resize(static_cast<std::size_t>(count));
  CompensatedSum<double> total;
  for (int i = 0; i < count; ++i) {
    const double v0 = es.eigenvectors()(0, i);
    out.nodes[static_cast<std::size_t>(i)] = 0.5 * (es.eigenvalues()(i) + 1.0);
    out.weights[static_cast<std::size_t>(i)] = v0 * v0;
    total.add(v0 * v0);
  }
  for (double& w : out.weights) w /= total.value();
  return out;
}

// ---------------------------------------------------------------------------
// Radial-angular rules on rank-one domains (disk and balls)

struct RadialRuleOptions {
  int radial_nodes = 0;    // per stick-breaking coordinate; 0 = minimum for exactness
  int angular_points = 0;  // per coordinate circle; 0 = minimum for exactness
};

inline int min_radial_nodes(int k_max) { return k_max / 2 + 1; }
inline int min_angular_points(int k_max) { return 2 * k_max + 1; }

/// Product rule for mu_lambda on a rank-one domain (B^n, or D_{n,1}, D_{1,m}).
/// Under mu_lambda the vector (|z_1|^2, ..., |z_n|^2) is Dirichlet(1,...,1;
/// lambda-n) and the arguments are independent and uniform, so stick-breaking
/// turns the radial part into n independent Beta(1, lambda-j) factors.
inline DomainRule radial_rule(const Domain& d, double lambda, int k_max, RadialRuleOptions opt = {}) {
  require(d.is_ball(), ErrorCode::invalid_argument, "radial rules need a rank-one domain");
  check_weight(d, lambda);
  require(k_max >= 0, ErrorCode::invalid_argument, "k_max must be >= 0");
  const int n = d.dim();
  const int nr = std::max(opt.radial_nodes, min_radial_nodes(k_max));
  const int nt = std::max(opt.angular_points, min_angular_points(k_max));

  std::vector<GaussRule1D> sticks;
  for (int j = 1; j <= n; ++j) sticks.push_back(beta_gauss_rule(nr, 1.0, lambda - j));

  DomainRule rule;
  rule.kind = RuleKind::radial_angular;
  rule.domain = d;
  rule.lambda = lambda;
  rule.exactness_degree = 2 * std::min(2 * nr - 1, (nt - 1) / 2);
  {
    std::ostringstream os;
    os << "radial_angular|" << d.shape_key() << "|" << exact_text(lambda) << "|" << nr << "|" << nt;
    rule.description = os.str();
    rule.id = hex64(fnv1a(rule.description));
  }

  // Radial tuples (t_1..t_n) with weights.
  std::vector<std::vector<double>> radial_t;
  std::vector<double> radial_w;
  {
    std::vector<std::size_t> idx(static_cast<std::size_t>(n), 0);
    while (true) {
      std::vector<double> t(static_cast<std::size_t>(n));
      double rest = 1.0;
      double w = 1.0;
      for (int j = 0; j < n; ++j) {
        const auto& s = sticks[static_cast<std::size_t>(j)];
        const double v = s.nodes[idx[static_cast<std::size_t>(j)]];
        t[static_cast<std::size_t>(j)] = rest * v;
        rest *= (1.0 - v);
        w *= s.weights[idx[static_cast<std::size_t>(j)]];
      }
      radial_t.push_back(std::move(t));
      radial_w.push_back(w);
      int j = n - 1;
      while (j >= 0 && ++idx[static_cast<std::size_t>(j)] == static_cast<std::size_t>(nr)) {
        idx[static_cast<std::size_t>(j)] = 0;
        --j;
      }
      if (j < 0) break;
    }
  }

  std::vector<cplx> roots(static_cast<std::size_t>(nt));
  for (int l = 0; l < nt; ++l) roots[static_cast<std::size_t>(l)] = std::polar(1.0, 2.0 * pi * l / nt);

  std::size_t angular_total = 1;
  for (int j = 0; j < n; ++j) angular_total *= static_cast<std::size_t>(nt);
  const double angular_weight = 1.0 / static_cast<double>(angular_total);

  rule.nodes.reserve(radial_t.size() * angular_total);
  rule.weights.reserve(radial_t.size() * angular_total);
  for (std::size_t r = 0; r < radial_t.size(); ++r) {
    std::vector<double> rho(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) rho[static_cast<std::size_t>(j)] = std::sqrt(radial_t[r][static_cast<std::size_t>(j)]);
    std::vector<int> a(static_cast<std::size_t>(n), 0);
    for (std::size_t q = 0; q < angular_total; ++q) {
      Point z(d.rows(), d.cols());
      for (int j = 0; j < n; ++j) z(j / d.cols(), j % d.cols()) = rho[static_cast<std::size_t>(j)] * roots[static_cast<std::size_t>(a[static_cast<std::size_t>(j)])];
      rule.nodes.push_back(std::move(z));
      rule.weights.push_back(radial_w[r] * angular_weight);
      for (int j = n - 1; j >= 0; --j) {
        if (++a[static_cast<std::size_t>(j)] < nt) break;
        a[static_cast<std::size_t>(j)] = 0;
      }
    }
  }

  if (d.is_disk()) {
    RingLayout rings;
    rings.angular_points = nt;
    for (std::size_t r = 0; r < radial_t.size(); ++r) {
      rings.radii.push_back(std::sqrt(radial_t[r][0]));
      rings.radial_weights.push_back(radial_w[r]);
    }
    rule.rings = std::move(rings);
  }
  return rule;
}

/// Radial rule for B^n.
inline DomainRule ball_radial_rule(int n, double lambda, int k_max, RadialRuleOptions opt = {}) {
  return radial_rule(Domain::unit_ball(n), lambda, k_max, opt);
}

// ---------------------------------------------------------------------------
// Monte Carlo

struct MonteCarloOptions {
  int batches = 20;
  std::size_t chunk = 4096;  // proposals per counter-based substream
  double min_acceptance = 1e-4;
};

/// Self-normalized sample of mu_lambda: proposals are uniform on the Frobenius
/// ball of radius sqrt(rank) (which contains the domain), rejected outside the
/// operator-norm ball, and weighted by det(I - Z Z*)^(lambda - p). Chunk c of
/// proposals is drawn from the counter stream (seed, c), so the rule is a pure
/// function of (domain, lambda, count, seed, chunk size).
inline DomainRule mc_sample(const Domain& d, double lambda, std::size_t count, std::uint64_t seed,
                            MonteCarloOptions opt = {}) {
  check_weight(d, lambda);
  require(count >= 1, ErrorCode::invalid_argument, "sample count must be >= 1");
  require(opt.chunk >= 1, ErrorCode::invalid_argument, "chunk size must be >= 1");
  const int n = d.rows();
  const int m = d.cols();
  const int real_dim = 2 * n * m;
  const double radius = std::sqrt(static_cast<double>(d.rank()));
  const double expo = lambda - d.genus();

  DomainRule rule;
  rule.kind = RuleKind::monte_carlo;
  rule.domain = d;
  rule.lambda = lambda;
  rule.seed = seed;
  {
    std::ostringstream os;
    os << "monte_carlo|" << d.shape_key() << "|" << exact_text(lambda) << "|" << count << "|" << seed << "|"
       << opt.chunk << "|" << opt.batches;
    rule.description = os.str();
    rule.id = hex64(fnv1a(rule.description));
  }
  rule.nodes.reserve(count);
  rule.weights.reserve(count);
  std::vector<double> raw;
  raw.reserve(count);

  std::vector<double> g(static_cast<std::size_t>(real_dim));
  for (std::uint64_t chunk = 0; rule.nodes.size() < count; ++chunk) {
    CounterStream stream(seed, chunk);
    for (std::size_t p = 0; p < opt.chunk && rule.nodes.size() < count; ++p) {
      double norm2 = 0.0;
      for (auto& x : g) {
        x = stream.normal();
        norm2 += x * x;
      }
      const double r = radius * std::pow(stream.uniform(), 1.0 / real_dim) / std::sqrt(norm2);
      ++rule.proposals;
      Point z(n, m);
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < m; ++k) {
          const auto s = static_cast<std::size_t>(j * m + k);
          z(j, k) = cplx(r * g[s], r * g[s + static_cast<std::size_t>(n * m)]);
        }
      const double det = defect_determinant(z);
      if (!(det > 0.0)) continue;
      raw.push_back(std::pow(det, expo));
      rule.nodes.push_back(std::move(z));
    }
    if (rule.proposals >= 65536 && rule.acceptance_rate() < opt.min_acceptance)
      fail(ErrorCode::low_acceptance, "acceptance rate " + std::to_string(rule.acceptance_rate()) +
                                          " below " + std::to_string(opt.min_acceptance) + " for " +
                                          d.describe());
  }
  CompensatedSum<double> total;
  for (double w : raw) total.add(w);
  rule.raw_weight_sum = total.value();
  for (double w : raw) rule.weights.push_back(w / rule.raw_weight_sum);

  const std::size_t batches = std::min<std::size_t>(static_cast<std::size_t>(std::max(opt.batches, 1)), count);
  for (std::size_t b = 0; b <= batches; ++b) rule.batch_offsets.push_back(b * count / batches);
  return rule;
}

// ---------------------------------------------------------------------------
// Torus grids

/// Product trapezoid grid on T^dim with normalized Haar weights; exact for
/// trigonometric polynomials of per-coordinate degree < points_per_circle.
inline TorusRule torus_rule(int torus_dim, int points_per_circle) {
  require(torus_dim >= 0, ErrorCode::invalid_argument, "torus dimension must be >= 0");
  require(points_per_circle >= 1, ErrorCode::invalid_argument, "points_per_circle must be >= 1");
  TorusRule rule;
  rule.kind = RuleKind::torus_grid;
  rule.exactness_degree = points_per_circle - 1;
  rule.description = "torus_grid|" + std::to_string(torus_dim) + "|" + std::to_string(points_per_circle);
  rule.id = hex64(fnv1a(rule.description));
  std::size_t total = 1;
  for (int j = 0; j < torus_dim; ++j) total *= static_cast<std::size_t>(points_per_circle);
  std::vector<int> idx(static_cast<std::size_t>(torus_dim), 0);
  for (std::size_t q = 0; q < total; ++q) {
    Angles a(static_cast<std::size_t>(torus_dim));
    for (int j = 0; j < torus_dim; ++j)
      a[static_cast<std::size_t>(j)] = 2.0 * pi * idx[static_cast<std::size_t>(j)] / points_per_circle;
    rule.nodes.push_back(std::move(a));
    rule.weights.push_back(1.0 / static_cast<double>(total));
    for (int j = torus_dim - 1; j >= 0; --j) {
      if (++idx[static_cast<std::size_t>(j)] < points_per_circle) break;
      idx[static_cast<std::size_t>(j)] = 0;
    }
  }
  return rule;
}

// ---------------------------------------------------------------------------
// Integration

/// Weighted sum in node order with compensated accumulation. Stochastic rules
/// also report the delta-method standard error of the self-normalized mean.
template <class Node, class F>
Estimate integrate(const QuadratureRule<Node>& rule, F&& f) {
  require(!rule.nodes.empty(), ErrorCode::invalid_argument, "empty rule");
  std::vector<cplx> values(rule.nodes.size());
  CompensatedSum<cplx> acc;
  CompensatedSum<double> wsum;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const cplx v = static_cast<cplx>(f(rule.nodes[i]));
    require(std::isfinite(v.real()) && std::isfinite(v.imag()), ErrorCode::non_finite,
            "integrand is not finite at node " + std::to_string(i));
    values[i] = v;
    acc.add(rule.weights[i] * v);
    wsum.add(rule.weights[i]);
  }
  Estimate out;
  out.value = acc.value() / wsum.value();
  if (rule.stochastic()) {
    out.stochastic = true;
    CompensatedSum<double> var;
    const double ws = wsum.value();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double w = rule.weights[i] / ws;
      var.add(w * w * std::norm(values[i] - out.value));
    }
    out.std_error = std::sqrt(var.value());
  }
  return out;
}

}  // namespace bergman
