#pragma once

// Bounded symbols with declared invariance groups.

#include "bergman/domain.hpp"

#include <functional>
#include <memory>
#include <variant>

namespace bergman {

// ---------------------------------------------------------------------------
// Profiles: real functions of one real variable with a rigorous sup bound on
// any closed interval.

class Profile {
 public:
  static Profile identity() {
    return Profile("identity", {}, [](double x) { return x; },
                   [](double lo, double hi) { return std::max(std::abs(lo), std::abs(hi)); });
  }
  static Profile power(int k) {
    require(k >= 0, ErrorCode::invalid_argument, "power profile needs k >= 0");
    return Profile("power", {static_cast<double>(k)}, [k](double x) { return std::pow(x, k); },
                   [k](double lo, double hi) { return std::pow(std::max(std::abs(lo), std::abs(hi)), k); });
  }
  /// exp(rate * x)
  static Profile exponential(double rate) {
    return Profile("exp", {rate}, [rate](double x) { return std::exp(rate * x); },
                   [rate](double lo, double hi) { return std::max(std::exp(rate * lo), std::exp(rate * hi)); });
  }
  static Profile sine(double freq) {
    return Profile("sin", {freq}, [freq](double x) { return std::sin(freq * x); },
                   [](double, double) { return 1.0; });
  }
  static Profile cosine(double freq) {
    return Profile("cos", {freq}, [freq](double x) { return std::cos(freq * x); },
                   [](double, double) { return 1.0; });
  }
  static Profile hyperbolic_tangent(double scale) {
    return Profile("tanh", {scale}, [scale](double x) { return std::tanh(scale * x); },
                   [scale](double lo, double hi) {
                     return std::max(std::abs(std::tanh(scale * lo)), std::abs(std::tanh(scale * hi)));
                   });
  }
  static Profile arctangent(double scale) {
    return Profile("atan", {scale}, [scale](double x) { return std::atan(scale * x); },
                   [scale](double lo, double hi) {
                     return std::max(std::abs(std::atan(scale * lo)), std::abs(std::atan(scale * hi)));
                   });
  }
  /// sum_i c_i x^i
  static Profile polynomial(std::vector<double> coeffs) {
    require(!coeffs.empty(), ErrorCode::invalid_argument, "polynomial profile needs coefficients");
    auto eval = [coeffs](double x) {
      double acc = 0.0;
      for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * x + *it;
      return acc;
    };
    auto bound = [coeffs](double lo, double hi) {
      const double r = std::max(std::abs(lo), std::abs(hi));
      double acc = 0.0;
      double p = 1.0;
      for (double c : coeffs) {
        acc += std::abs(c) * p;
        p *= r;
      }
      return acc;
    };
    return Profile("poly", coeffs, eval, bound);
  }
  /// exp(-((x - center) / width)^2)
  static Profile gaussian(double center, double width) {
    require(width > 0, ErrorCode::invalid_argument, "gaussian width must be positive");
    return Profile("gauss", {center, width},
                   [center, width](double x) { return std::exp(-std::pow((x - center) / width, 2)); },
                   [](double, double) { return 1.0; });
  }

  /// outer(inner(x))
  static Profile compose(const Profile& outer, const Profile& inner) {
    auto params = outer.params_;
    params.insert(params.end(), inner.params_.begin(), inner.params_.end());
    return Profile(outer.kind_ + "o" + inner.kind_, params,
                   [outer, inner](double x) { return outer(inner(x)); },
                   [outer, inner](double lo, double hi) {
                     const double b = inner.bound(lo, hi);
                     return outer.bound(-b, b);
                   });
  }

  double operator()(double x) const { return eval_(x); }
  double bound(double lo, double hi) const { return bound_(lo, hi); }
  const std::string& kind() const { return kind_; }
  const std::vector<double>& params() const { return params_; }

  std::string describe() const {
    std::ostringstream os;
    os.precision(17);
    os << kind_ << "(";
    for (std::size_t i = 0; i < params_.size(); ++i) os << (i ? "," : "") << params_[i];
    os << ")";
    return os.str();
  }

 private:
  Profile(std::string kind, std::vector<double> params, std::function<double(double)> eval,
          std::function<double(double, double)> bound)
      : kind_(std::move(kind)), params_(std::move(params)), eval_(std::move(eval)), bound_(std::move(bound)) {}

  std::string kind_;
  std::vector<double> params_;
  std::function<double(double)> eval_;
  std::function<double(double, double)> bound_;
};

// ---------------------------------------------------------------------------
// Invariant coordinates

/// arg((1+z)/(1-z)) in (-pi/2, pi/2); constant on the circle arcs through 1 and -1.
inline double hyperbolic_coordinate(cplx z) { return std::arg((1.0 + z) / (1.0 - z)); }

/// Re((1+z)/(1-z)) = (1-|z|^2)/|1-z|^2 > 0; constant on horocycles at 1. Unbounded.
inline double parabolic_coordinate(cplx z) { return (1.0 - std::norm(z)) / std::norm(1.0 - z); }

/// |1 - z.z| / (1 - |z|^2) >= 1 on B^n with the bilinear z.z = sum z_j^2;
/// invariant under SO_0(n,1) acting by real fractional-linear maps. Unbounded.
inline double real_form_coordinate(const Point& z) {
  cplx zz = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) zz += z(i) * z(i);
  return std::abs(1.0 - zz) / (1.0 - z.squaredNorm());
}

// ---------------------------------------------------------------------------
// Symbols

enum class Invariance { none, rotation, torus, maximal_compact, hyperbolic, parabolic, real_form };

inline std::string_view to_string(Invariance inv) {
  switch (inv) {
    case Invariance::none: return "none";
    case Invariance::rotation: return "rotation";
    case Invariance::torus: return "torus";
    case Invariance::maximal_compact: return "maximal_compact";
    case Invariance::hyperbolic: return "hyperbolic";
    case Invariance::parabolic: return "parabolic";
    case Invariance::real_form: return "real_form";
  }
  return "unknown";
}

/// Which matrix entries of T_phi vanish identically: none, entries between
/// different degrees (invariance under the center of K), or entries between
/// different torus weights.
enum class BlockPattern { full, degree, weight };

inline BlockPattern block_pattern(Invariance inv) {
  switch (inv) {
    case Invariance::torus:
    case Invariance::maximal_compact: return BlockPattern::weight;
    case Invariance::rotation: return BlockPattern::degree;
    default: return BlockPattern::full;
  }
}

enum class KStatistic { trace1, trace2 };  // tr(ZZ*) or tr((ZZ*)^2)
enum class BoundingMap { none, arctan };

struct RadialSymbol {
  Profile profile;  // of r = |z| (Frobenius norm)
};
struct KInvariantSymbol {
  KStatistic statistic;
  Profile profile;
};
/// coeff * prod |z_jk|^(2 abs2_jk) * (Re X)^re_power * (Im X)^im_power with
/// X = z_11 z_22 conj(z_12) conj(z_21).
struct TorusTerm {
  double coeff = 1.0;
  std::vector<int> abs2;  // row-major, empty = all zero
  int re_power = 0;
  int im_power = 0;
};
struct TorusInvariantSymbol {
  std::vector<TorusTerm> terms;
};
struct HyperbolicArcSymbol {
  Profile profile;  // of u(z)
};
struct ParabolicSymbol {
  Profile profile;  // of arctan(v(z))
  BoundingMap bounding = BoundingMap::arctan;
};
struct RealFormSymbol {
  Profile profile;  // of arctan(F(z))
  BoundingMap bounding = BoundingMap::arctan;
};
struct OracleSymbol {
  std::function<cplx(const Point&)> eval;
  Invariance invariance = Invariance::none;
  double bound = 1.0;
  bool real_valued = false;
  std::string description;
};

class Symbol {
 public:
  using Variant = std::variant<RadialSymbol, KInvariantSymbol, TorusInvariantSymbol, HyperbolicArcSymbol,
                               ParabolicSymbol, RealFormSymbol, OracleSymbol>;

  explicit Symbol(Variant v) : v_(std::make_shared<const Variant>(std::move(v))) {}

  static Symbol radial(Profile p) { return Symbol(RadialSymbol{std::move(p)}); }
  static Symbol k_invariant(KStatistic s, Profile p) { return Symbol(KInvariantSymbol{s, std::move(p)}); }
  static Symbol torus_invariant(std::vector<TorusTerm> t) { return Symbol(TorusInvariantSymbol{std::move(t)}); }
  static Symbol hyperbolic(Profile p) { return Symbol(HyperbolicArcSymbol{std::move(p)}); }
  static Symbol parabolic(Profile p, BoundingMap b = BoundingMap::arctan) { return Symbol(ParabolicSymbol{std::move(p), b}); }
  static Symbol real_form(Profile p, BoundingMap b = BoundingMap::arctan) { return Symbol(RealFormSymbol{std::move(p), b}); }
  static Symbol oracle(std::function<cplx(const Point&)> f, Invariance inv, double bound, bool real_valued,
                       std::string description) {
    return Symbol(OracleSymbol{std::move(f), inv, bound, real_valued, std::move(description)});
  }
  /// Re z_jk or Im z_jk; no invariance.
  static Symbol coordinate(int j, int k, bool imaginary = false) {
    return oracle([j, k, imaginary](const Point& z) { return cplx(imaginary ? z(j, k).imag() : z(j, k).real(), 0.0); },
                  Invariance::none, 1.0, true,
                  std::string(imaginary ? "im" : "re") + "(z" + std::to_string(j) + std::to_string(k) + ")");
  }

  const Variant& variant() const { return *v_; }

  /// Evaluation without domain checks (hot path).
  cplx operator()(const Point& z) const {
    return std::visit([&](const auto& s) { return eval(s, z); }, *v_);
  }

  Invariance invariance() const {
    return std::visit(
        [](const auto& s) -> Invariance {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, RadialSymbol> || std::is_same_v<T, KInvariantSymbol>)
            return Invariance::maximal_compact;
          else if constexpr (std::is_same_v<T, TorusInvariantSymbol>)
            return Invariance::torus;
          else if constexpr (std::is_same_v<T, HyperbolicArcSymbol>)
            return Invariance::hyperbolic;
          else if constexpr (std::is_same_v<T, ParabolicSymbol>)
            return Invariance::parabolic;
          else if constexpr (std::is_same_v<T, RealFormSymbol>)
            return Invariance::real_form;
          else
            return s.invariance;
        },
        *v_);
  }

  bool real_valued() const {
    if (auto o = std::get_if<OracleSymbol>(v_.get())) return o->real_valued;
    return true;
  }

  bool bounded() const {
    if (auto p = std::get_if<ParabolicSymbol>(v_.get())) return p->bounding != BoundingMap::none;
    if (auto r = std::get_if<RealFormSymbol>(v_.get())) return r->bounding != BoundingMap::none;
    return true;
  }

  /// Which domains the family is defined on.
  void check_domain(const Domain& d) const {
    std::visit(
        [&](const auto& s) {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, HyperbolicArcSymbol> || std::is_same_v<T, ParabolicSymbol>)
            require(d.is_disk(), ErrorCode::invalid_argument, "hyperbolic and parabolic symbols live on the disk");
          else if constexpr (std::is_same_v<T, RealFormSymbol>)
            require(d.cols() == 1, ErrorCode::invalid_argument, "real-form symbols live on the unit ball");
          else if constexpr (std::is_same_v<T, TorusInvariantSymbol>) {
            for (const auto& t : s.terms) {
              require(t.abs2.empty() || t.abs2.size() == static_cast<std::size_t>(d.dim()),
                      ErrorCode::shape_mismatch, "torus term exponent grid");
              if (t.re_power || t.im_power)
                require(d.rows() >= 2 && d.cols() >= 2, ErrorCode::invalid_argument,
                        "cross invariant needs n, m >= 2");
            }
          }
        },
        *v_);
  }

  /// sup |phi| over the open domain.
  double esssup_bound(const Domain& d) const {
    return std::visit(
        [&](const auto& s) -> double {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, RadialSymbol>)
            return s.profile.bound(0.0, std::sqrt(static_cast<double>(d.rank())));
          else if constexpr (std::is_same_v<T, KInvariantSymbol>)
            return s.profile.bound(0.0, static_cast<double>(d.rank()));
          else if constexpr (std::is_same_v<T, TorusInvariantSymbol>) {
            double b = 0.0;
            for (const auto& t : s.terms) b += std::abs(t.coeff);
            return b;
          } else if constexpr (std::is_same_v<T, HyperbolicArcSymbol>)
            return s.profile.bound(-pi / 2, pi / 2);
          else if constexpr (std::is_same_v<T, ParabolicSymbol>)
            return s.bounding == BoundingMap::none ? std::numeric_limits<double>::infinity()
                                                   : s.profile.bound(0.0, pi / 2);
          else if constexpr (std::is_same_v<T, RealFormSymbol>)
            return s.bounding == BoundingMap::none ? std::numeric_limits<double>::infinity()
                                                   : s.profile.bound(pi / 4, pi / 2);
          else
            return s.bound;
        },
        *v_);
  }

  std::string describe() const {
    return std::visit(
        [](const auto& s) -> std::string {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, RadialSymbol>)
            return "radial:" + s.profile.describe();
          else if constexpr (std::is_same_v<T, KInvariantSymbol>)
            return std::string("k_invariant:") + (s.statistic == KStatistic::trace1 ? "trace1:" : "trace2:") +
                   s.profile.describe();
          else if constexpr (std::is_same_v<T, TorusInvariantSymbol>) {
            std::ostringstream os;
            os.precision(17);
            os << "torus:";
            for (const auto& t : s.terms) {
              os << "[" << t.coeff << ";";
              for (int e : t.abs2) os << e;
              os << ";" << t.re_power << ";" << t.im_power << "]";
            }
            return os.str();
          } else if constexpr (std::is_same_v<T, HyperbolicArcSymbol>)
            return "hyperbolic:" + s.profile.describe();
          else if constexpr (std::is_same_v<T, ParabolicSymbol>)
            return "parabolic:" + std::string(s.bounding == BoundingMap::arctan ? "atan:" : "raw:") + s.profile.describe();
          else if constexpr (std::is_same_v<T, RealFormSymbol>)
            return "real_form:" + std::string(s.bounding == BoundingMap::arctan ? "atan:" : "raw:") + s.profile.describe();
          else
            return "oracle:" + s.description;
        },
        *v_);
  }

 private:
  static cplx eval(const RadialSymbol& s, const Point& z) { return s.profile(z.norm()); }
  static cplx eval(const KInvariantSymbol& s, const Point& z) {
    const CMatrix g = small_gram(z);
    const double t = s.statistic == KStatistic::trace1 ? g.trace().real() : (g * g).trace().real();
    return s.profile(t);
  }
  static cplx eval(const TorusInvariantSymbol& s, const Point& z) {
    double acc = 0.0;
    for (const auto& t : s.terms) {
      double v = t.coeff;
      for (std::size_t i = 0; i < t.abs2.size(); ++i)
        if (t.abs2[i]) v *= std::pow(std::norm(z(static_cast<Eigen::Index>(i) / z.cols(), static_cast<Eigen::Index>(i) % z.cols())), t.abs2[i]);
      if (t.re_power || t.im_power) {
        const cplx x = z(0, 0) * z(1, 1) * std::conj(z(0, 1)) * std::conj(z(1, 0));
        v *= std::pow(x.real(), t.re_power) * std::pow(x.imag(), t.im_power);
      }
      acc += v;
    }
    return acc;
  }
  static cplx eval(const HyperbolicArcSymbol& s, const Point& z) { return s.profile(hyperbolic_coordinate(z(0, 0))); }
  static cplx eval(const ParabolicSymbol& s, const Point& z) {
    const double v = parabolic_coordinate(z(0, 0));
    return s.profile(s.bounding == BoundingMap::arctan ? std::atan(v) : v);
  }
  static cplx eval(const RealFormSymbol& s, const Point& z) {
    const double f = real_form_coordinate(z);
    return s.profile(s.bounding == BoundingMap::arctan ? std::atan(f) : f);
  }
  static cplx eval(const OracleSymbol& s, const Point& z) { return s.eval(z); }

  std::shared_ptr<const Variant> v_;
};

/// Invariance shared by both operands of a sum.
inline Invariance common_invariance(Invariance a, Invariance b) {
  if (a == b) return a;
  auto rank = [](Invariance i) {
    switch (i) {
      case Invariance::maximal_compact: return 3;
      case Invariance::torus: return 2;
      case Invariance::rotation: return 1;
      default: return 0;
    }
  };
  const int r = std::min(rank(a), rank(b));
  if (r >= 2) return Invariance::torus;
  if (r == 1) return Invariance::rotation;
  return Invariance::none;
}

/// ca * a + cb * b as an oracle symbol.
inline Symbol linear_combination(const Symbol& a, double ca, const Symbol& b, double cb, const Domain& d) {
  std::ostringstream os;
  os.precision(17);
  os << ca << "*" << a.describe() << "+" << cb << "*" << b.describe();
  return Symbol::oracle([a, b, ca, cb](const Point& z) { return ca * a(z) + cb * b(z); },
                        common_invariance(a.invariance(), b.invariance()),
                        std::abs(ca) * a.esssup_bound(d) + std::abs(cb) * b.esssup_bound(d),
                        a.real_valued() && b.real_valued(), os.str());
}

/// Checked evaluation.
inline cplx symbol_eval(const Symbol& s, const Domain& d, const Point& z) {
  s.check_domain(d);
  require(contains(d, z), ErrorCode::outside_domain, "symbol argument outside " + d.describe());
  require(s.bounded(), ErrorCode::unbounded_symbol, "raw coordinate without a bounding map: " + s.describe());
  return s(z);
}

}  // namespace bergman
