#pragma once

// Shared numeric types, the library error type, and small numeric utilities
// (compensated summation, spectral norms, content hashing, counter-based RNG).

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace bergman {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

inline constexpr double pi = std::numbers::pi;

enum class ErrorCode {
  invalid_argument,
  shape_mismatch,
  outside_domain,
  weight_too_small,
  low_acceptance,
  non_finite,
  ill_conditioned,
  not_positive_definite,
  singular_block,
  not_in_group,
  phase_tracking,
  non_compact,
  basis_mismatch,
  unbounded_symbol,
  io,
  config,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::shape_mismatch: return "shape_mismatch";
    case ErrorCode::outside_domain: return "outside_domain";
    case ErrorCode::weight_too_small: return "weight_too_small";
    case ErrorCode::low_acceptance: return "low_acceptance";
    case ErrorCode::non_finite: return "non_finite";
    case ErrorCode::ill_conditioned: return "ill_conditioned";
    case ErrorCode::not_positive_definite: return "not_positive_definite";
    case ErrorCode::singular_block: return "singular_block";
    case ErrorCode::not_in_group: return "not_in_group";
    case ErrorCode::phase_tracking: return "phase_tracking";
    case ErrorCode::non_compact: return "non_compact";
    case ErrorCode::basis_mismatch: return "basis_mismatch";
    case ErrorCode::unbounded_symbol: return "unbounded_symbol";
    case ErrorCode::io: return "io";
    case ErrorCode::config: return "config";
  }
  return "unknown";
}

/// Every failure raised by the library carries a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

// Neumaier-compensated accumulator. Real and imaginary parts are compensated
// independently.
template <class T>
class CompensatedSum {
 public:
  void add(T x) {
    if constexpr (std::is_same_v<T, cplx>) {
      re_.add(x.real());
      im_.add(x.imag());
    } else {
      const T t = sum_ + x;
      if (std::abs(sum_) >= std::abs(x))
        comp_ += (sum_ - t) + x;
      else
        comp_ += (x - t) + sum_;
      sum_ = t;
    }
  }
  T value() const {
    if constexpr (std::is_same_v<T, cplx>)
      return {re_.value(), im_.value()};
    else
      return sum_ + comp_;
  }

 private:
  T sum_{};
  T comp_{};
  struct Empty {};
  std::conditional_t<std::is_same_v<T, cplx>, CompensatedSum<double>, Empty> re_{}, im_{};
};

inline Eigen::VectorXd singular_values(const CMatrix& a) {
  if (a.size() == 0) return {};
  if (std::min(a.rows(), a.cols()) <= 32) return Eigen::JacobiSVD<CMatrix>(a).singularValues();
  return Eigen::BDCSVD<CMatrix>(a).singularValues();
}

inline double spectral_norm(const CMatrix& a) {
  if (a.size() == 0) return 0.0;
  return singular_values(a)(0);
}

inline double max_abs(const CMatrix& a) { return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff(); }

// 64-bit FNV-1a over a canonical text description.
inline std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) out[static_cast<std::size_t>(i)] = digits[v & 0xF];
  return out;
}

/// Round-trippable text for a double, used when hashing parameters.
inline std::string exact_text(double v) {
  return hex64(std::bit_cast<std::uint64_t>(v));
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Counter-based stream: the k-th draw of stream (seed, stream_id) is a pure
/// function of (seed, stream_id, k), so chunks can be generated in any order.
class CounterStream {
 public:
  CounterStream(std::uint64_t seed, std::uint64_t stream_id)
      : key_(splitmix64(seed ^ splitmix64(stream_id + 0x632be59bd9b4e019ULL))) {}

  std::uint64_t next_u64() { return splitmix64(key_ + 0x9e3779b97f4a7c15ULL * counter_++); }

  /// Uniform on the open interval (0, 1).
  double uniform() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

  /// Standard normal by Box-Muller; both variates are used.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * pi * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * pi * u2);
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace bergman
