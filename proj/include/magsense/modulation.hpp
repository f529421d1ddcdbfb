/**
 * @file modulation.hpp
 * @brief Effective rotating / anti-rotating couplings produced by a two-tone bias-field
 *        modulation of the magnon frequency, and diagnostics for the neglected sidebands.
 *
 * The modulation lambda_i cos(omega_i t + phi_i) of the magnon frequency is removed by a
 * frame change and expanded with Jacobi-Anger, which turns the bare coupling g into the
 * double Bessel series
 *
 *   g1(t)/g = sum_{m1,m2} J_m1(l1) J_m2(l2) exp(-i(wL + wd + m1 w1 + m2 w2) t - i(m1 p1 + m2 p2))
 *   g2(t)/g = sum_{n1,n2} J_n1(l1) J_n2(l2) exp(-i(wL - wd - n1 w1 - n2 w2) t + i(n1 p1 + n2 p2))
 *
 * With w1 = wd - wL and w2 = wL + wd the (0,-1) term of g1 and the (-1,0) term of g2 are static;
 * every other term oscillates and is dropped.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "magsense/errors.hpp"

namespace magsense {

/// Bessel function of the first kind of integer order, J_n(x), for |x| <= 30.
///
/// Miller backward recurrence normalized with J_0 + 2 sum J_2k = 1. Negative orders and
/// arguments use J_-n(x) = (-1)^n J_n(x) and J_n(-x) = (-1)^n J_n(x).
inline double bessel_j(int order, double x) {
  if (!std::isfinite(x) || std::abs(x) > 30.0) throw DomainError("bessel_j: |x| must be <= 30");
  const int n = std::abs(order);
  double sign = 1.0;
  if (order < 0 && (n % 2) == 1) sign = -sign;
  if (x < 0.0 && (n % 2) == 1) sign = -sign;
  const double ax = std::abs(x);
  if (ax == 0.0) return n == 0 ? 1.0 : 0.0;
  if (ax < 1e-6) {
    // Two leading series terms are exact to double precision here.
    const double h = 0.5 * ax;
    return sign * std::pow(h, n) / std::tgamma(n + 1.0) * (1.0 - h * h / (n + 1.0));
  }

  // Start well above max(n, x) so the seed error has decayed below double precision.
  const int top = 2 * ((std::max(n, static_cast<int>(ax)) + 20 +
                        static_cast<int>(std::sqrt(60.0 * std::max(n, static_cast<int>(ax) + 1)))) /
                       2);
  constexpr double big = 1.0e250;
  double j_next = 0.0;  // J_{k+1}
  double j_curr = 1.0e-300;  // J_k
  double sum = 0.0;     // J_0 + 2 sum J_2k, accumulated on the fly
  double result = 0.0;
  for (int k = top; k > 0; --k) {
    const double j_prev = (2.0 * k / ax) * j_curr - j_next;  // J_{k-1}
    j_next = j_curr;
    j_curr = j_prev;
    if (std::abs(j_curr) > big) {
      j_curr /= big;
      j_next /= big;
      result /= big;
      sum /= big;
    }
    if ((k - 1) % 2 == 0 && k - 1 > 0) sum += 2.0 * j_curr;
    if (k - 1 == n) result = j_curr;
  }
  sum += j_curr;  // J_0 term
  return sign * result / sum;
}

struct ModulationSettings {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double phi1 = 0.0;
  double phi2 = 0.0;
  double omega1 = 0.0;
  double omega2 = 0.0;
  double omega_L = 0.0;
  double omega_d = 0.0;

  /// Settings with w1 = wd - wL and w2 = wL + wd and zero phases.
  static ModulationSettings matched_to(double lambda1, double lambda2, double omega_L,
                                       double omega_d) {
    ModulationSettings s;
    s.lambda1 = lambda1;
    s.lambda2 = lambda2;
    s.omega_L = omega_L;
    s.omega_d = omega_d;
    s.omega1 = omega_d - omega_L;
    s.omega2 = omega_L + omega_d;
    return s;
  }

  double residual1() const { return omega1 - (omega_d - omega_L); }
  double residual2() const { return omega2 - (omega_L + omega_d); }

  bool matched() const {
    const double scale = std::max({std::abs(omega_L) + std::abs(omega_d), std::abs(omega1),
                                   std::abs(omega2), std::numeric_limits<double>::min()});
    return std::abs(residual1()) <= 1e-9 * scale && std::abs(residual2()) <= 1e-9 * scale;
  }
};

inline std::vector<std::string> modulation_warnings(const ModulationSettings& s) {
  std::vector<std::string> w;
  if (s.lambda1 > 2.0 || s.lambda2 > 2.0) w.emplace_back("modulation index above 2");
  if (s.phi1 != 0.0 || s.phi2 != 0.0) w.emplace_back("nonzero modulation phase");
  if (!s.matched()) w.emplace_back("modulation frequencies not matched to drives");
  return w;
}

/// Signed static couplings. Both carry the J_-1 = -J_1 sign, so both are negative for small
/// positive modulation indices.
struct EffectiveCouplings {
  double g1 = 0.0;  // anti-rotating (two-mode squeezing) weight
  double g2 = 0.0;  // rotating (beam splitter) weight
};

inline EffectiveCouplings effective_couplings(double g, const ModulationSettings& s) {
  if (s.lambda1 < 0.0 || s.lambda2 < 0.0) throw DomainError("effective_couplings: lambda must be >= 0");
  if (!s.matched()) {
    std::ostringstream msg;
    msg << "effective_couplings: modulation frequencies not matched (omega1 residual "
        << s.residual1() << " rad/s, omega2 residual " << s.residual2() << " rad/s)";
    throw PreconditionError(msg.str());
  }
  // The downstream drift matrix has no phase factors; refuse instead of silently dropping them.
  if (s.phi1 != 0.0 || s.phi2 != 0.0) {
    throw PreconditionError("effective_couplings: nonzero modulation phases are not supported");
  }
  return {g * bessel_j(0, s.lambda1) * bessel_j(-1, s.lambda2),
          g * bessel_j(0, s.lambda2) * bessel_j(-1, s.lambda1)};
}

struct CouplingSeriesValue {
  std::complex<double> g1;
  std::complex<double> g2;
};

/// Truncated double Bessel series of the time-dependent couplings, |m_i|, |n_i| <= truncation.
inline CouplingSeriesValue coupling_series(double g, const ModulationSettings& s, double t,
                                           int truncation) {
  if (truncation < 0) throw DomainError("coupling_series: truncation must be >= 0");
  const int M = truncation;
  std::vector<double> j1(2 * M + 1), j2(2 * M + 1);
  for (int m = -M; m <= M; ++m) {
    j1[m + M] = bessel_j(m, s.lambda1);
    j2[m + M] = bessel_j(m, s.lambda2);
  }
  const std::complex<double> i{0.0, 1.0};
  std::complex<double> sum1{}, sum2{};
  for (int a = -M; a <= M; ++a) {
    for (int b = -M; b <= M; ++b) {
      const double w = j1[a + M] * j2[b + M];
      const double f1 = s.omega_L + s.omega_d + a * s.omega1 + b * s.omega2;
      const double f2 = s.omega_L - s.omega_d - a * s.omega1 - b * s.omega2;
      const double p = a * s.phi1 + b * s.phi2;
      sum1 += w * std::exp(-i * (f1 * t + p));
      sum2 += w * std::exp(-i * (f2 * t - p));
    }
  }
  return {g * sum1, g * sum2};
}

struct SidebandTerm {
  int which = 1;           // 1: term of g1, 2: term of g2
  int index1 = 0;          // m1 (or n1)
  int index2 = 0;          // m2 (or n2)
  double frequency = 0.0;  // rad/s
  double amplitude = 0.0;  // rad/s, signed g J(l1) J(l2)
};

struct RwaResidual {
  std::vector<SidebandTerm> terms;  // neglected modulation sidebands
  double metric = 0.0;              // max |amplitude| / |frequency| over terms
  bool violation = false;           // a neglected term is static
  double carrier_metric = 0.0;      // same ratio for the unmodulated (0,0) carrier terms
};

/// Enumerates the modulation sidebands dropped by the static-coupling approximation.
///
/// Terms with (m1, m2) = (0, 0) are the unmodulated carriers; they are reported through
/// carrier_metric and are not part of the sideband list. Zero-amplitude terms are skipped.
inline RwaResidual rwa_residual(double g, const ModulationSettings& s, int truncation = 3) {
  if (truncation < 0) throw DomainError("rwa_residual: truncation must be >= 0");
  if (!s.matched()) throw PreconditionError("rwa_residual: modulation frequencies not matched");
  RwaResidual out;
  const double scale = std::abs(s.omega_L) + std::abs(s.omega_d);
  const double static_tol = 1e-9 * std::max(scale, std::numeric_limits<double>::min());
  const int M = truncation;
  auto ratio = [&](double amp, double freq) {
    return std::abs(freq) <= static_tol ? std::numeric_limits<double>::infinity()
                                        : std::abs(amp) / std::abs(freq);
  };
  for (int which = 1; which <= 2; ++which) {
    for (int a = -M; a <= M; ++a) {
      for (int b = -M; b <= M; ++b) {
        const bool kept = which == 1 ? (a == 0 && b == -1) : (a == -1 && b == 0);
        if (kept) continue;
        const double amp = g * bessel_j(a, s.lambda1) * bessel_j(b, s.lambda2);
        if (amp == 0.0) continue;
        const double freq = which == 1 ? s.omega_L + s.omega_d + a * s.omega1 + b * s.omega2
                                       : s.omega_L - s.omega_d - a * s.omega1 - b * s.omega2;
        const double r = ratio(amp, freq);
        if (a == 0 && b == 0) {
          out.carrier_metric = std::max(out.carrier_metric, r);
          continue;
        }
        out.terms.push_back({which, a, b, freq, amp});
        if (std::isinf(r)) out.violation = true;
        out.metric = std::max(out.metric, r);
      }
    }
  }
  return out;
}

}  // namespace magsense
