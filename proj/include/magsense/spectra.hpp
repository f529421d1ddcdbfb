/**
 * @file spectra.hpp
 * @brief Frequency-domain input-output solution of the linearized sensor.
 *
 * The phase quadrature of the cavity output is
 *
 *   P_out(w) = M1 x'_m + M2 p'_m + M3 x_a + M4 p_a,
 *
 * where the transfer functions come from the resolvent (-i w I - C)^-1 of the drift matrix
 * and the input-output relation P_out = sqrt(kappa_a) P_a - p_a^in. The magnetic signal
 * enters through the modified magnon input x'_m, so R_B = |M1|^2 is the signal response and
 * N_ad = (n_a + 1/2) |M4|^2 / |M1|^2 is the cavity-referred (added) noise.
 */
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <vector>

#include "magsense/errors.hpp"
#include "magsense/model.hpp"
#include "magsense/modulation.hpp"
#include "magsense/stability.hpp"

namespace magsense {

using cplx = std::complex<double>;

struct TransferFunctions {
  double omega = 0.0;
  cplx m1, m2, m3, m4;
};

inline constexpr double kStandardQuantumLimit = 0.5;

namespace detail {

inline void require_stable(const SystemParams& p, const EffectiveCouplings& c, const char* who) {
  const auto report = routh_hurwitz(p, c);
  if (!report.stable) {
    throw InstabilityError(std::string(who) + ": parameters are dynamically unstable\n" +
                           report.describe());
  }
}

// Resolvent solve without the stability check; callers guarantee stability.
inline TransferFunctions resolvent_transfer(double omega, const SystemParams& p,
                                            const EffectiveCouplings& c) {
  using namespace quadrature;
  const DriftMatrix drift = drift_matrix(p, c);
  // Work in units of kappa_m so the pivoting sees O(1) entries.
  const double u = p.kappa_m;
  Eigen::Matrix4cd a = (-cplx(0.0, omega / u)) * Eigen::Matrix4cd::Identity() -
                       (drift.m / u).cast<cplx>();
  // Only the P_a row of the inverse is needed: solve a^T y = e_Pa.
  Eigen::PartialPivLU<Eigen::Matrix4cd> lu(a.transpose());
  if (!(std::abs(lu.determinant()) > 1e-13)) {
    throw InstabilityError("transfer_functions: singular resolvent");
  }
  Eigen::Vector4cd e = Eigen::Vector4cd::Zero();
  e(Pa) = 1.0;
  const Eigen::Vector4cd row = lu.solve(e) / u;
  const double ka = p.kappa_a, km = p.kappa_m;
  TransferFunctions t;
  t.omega = omega;
  t.m1 = std::sqrt(ka * km) * row(Xm);
  t.m2 = std::sqrt(ka * km) * row(Pm);
  t.m3 = ka * row(Xa);
  t.m4 = ka * row(Pa) - 1.0;
  return t;
}

}  // namespace detail

/// Transfer functions M1..M4 at probe frequency omega from the 4x4 resolvent.
inline TransferFunctions transfer_functions(double omega, const SystemParams& p,
                                            const EffectiveCouplings& c) {
  detail::require_stable(p, c, "transfer_functions");
  return detail::resolvent_transfer(omega, p, c);
}

inline cplx susceptibility(double kappa, double omega) { return 1.0 / cplx(0.5 * kappa, -omega); }

struct ZeroDetuningTransfer {
  cplx m1, m4;
};

/// Zero-detuning reduction of the resolvent: with D = 1 + chi_a chi_m (g2^2 - g1^2),
/// M1 = -chi_a chi_m (g1 + g2) sqrt(kappa_a kappa_m) / D and M4 = (chi_a kappa_a - D) / D.
inline ZeroDetuningTransfer transfer_closed_form_zero_detuning(double omega, const SystemParams& p,
                                                               const EffectiveCouplings& c) {
  if (p.delta_a != 0.0 || p.delta_m != 0.0) {
    throw PreconditionError("transfer_closed_form_zero_detuning: detunings must be zero");
  }
  const cplx chi_a = susceptibility(p.kappa_a, omega);
  const cplx chi_m = susceptibility(p.kappa_m, omega);
  const cplx d = 1.0 + chi_a * chi_m * (c.g2 * c.g2 - c.g1 * c.g1);
  return {-chi_a * chi_m * (c.g1 + c.g2) * std::sqrt(p.kappa_a * p.kappa_m) / d,
          (chi_a * p.kappa_a - d) / d};
}

/// Symmetrized phase-quadrature output density. At zero detuning M2 = M3 = 0 and this is
/// (n_a + 1/2)|M4|^2 + |M1|^2 (n_m + 1/2 + s_bex).
inline double output_spectrum(const TransferFunctions& t, const NoiseOccupancies& n,
                              double s_bex = 0.0) {
  if (s_bex < 0.0) throw DomainError("output_spectrum: signal density must be >= 0");
  const double cavity = (n.n_a + 0.5) * (std::norm(t.m3) + std::norm(t.m4));
  const double magnon = (n.n_m + 0.5) * (std::norm(t.m1) + std::norm(t.m2));
  return cavity + magnon + std::norm(t.m1) * s_bex;
}

/// R_B = dY_out / dS_Bex = |M1|^2.
inline double response(double omega, const SystemParams& p, const EffectiveCouplings& c) {
  return std::norm(transfer_functions(omega, p, c).m1);
}

inline double additional_noise_from(const TransferFunctions& t, double n_a) {
  const double rb = std::norm(t.m1);
  if (!(rb > 0.0)) {
    throw PreconditionError("additional_noise: no signal response (M1 = 0) at this frequency");
  }
  return (n_a + 0.5) * std::norm(t.m4) / rb;
}

/// N_ad = (n_a + 1/2)|M4|^2 / |M1|^2. Magnon input noise is probe-referred and excluded.
inline double additional_noise(double omega, const SystemParams& p, const EffectiveCouplings& c,
                               double n_a) {
  return additional_noise_from(transfer_functions(omega, p, c), n_a);
}

struct UltraStrongParams {
  double cooperativity = 1.0;
  double kappa_a = 0.0;
  double kappa_m = 0.0;
  double n_a = 0.0;
};

struct UltraStrongResult {
  double r_b2 = 0.0;
  double n_ad2 = 0.0;
};

/// Reference scheme with native counter-rotating coupling (no modulation), zero detuning:
/// R_B2 = 4 ka^2 km^2 C |chi_m1 / (2 i w + ka)|^2 with chi_m1 = 1/(km/2 + i w), and
/// N_ad2 = |1 + 2 ka / (2 i w + ka)|^2 (n_a + 1/2) / R_B2.
inline UltraStrongResult ultrastrong_reference(double omega, const UltraStrongParams& u) {
  if (u.cooperativity < 1.0) throw DomainError("ultrastrong_reference: cooperativity must be >= 1");
  const double ka = u.kappa_a, km = u.kappa_m;
  const cplx chi_m1 = 1.0 / cplx(0.5 * km, omega);
  const cplx cav = cplx(ka, 2.0 * omega);
  UltraStrongResult r;
  r.r_b2 = 4.0 * ka * ka * km * km * u.cooperativity * std::norm(chi_m1 / cav);
  r.n_ad2 = std::norm(1.0 + 2.0 * ka / cav) * (u.n_a + 0.5) / r.r_b2;
  return r;
}

enum class GridSpacing { log, linear };

/// Probe grid in units of kappa_m.
inline std::vector<double> omega_grid_over_kappa_m(double min, double max, int points,
                                                   GridSpacing spacing) {
  if (points < 1) throw PreconditionError("omega grid: points must be >= 1");
  if (max < min) throw PreconditionError("omega grid: max must be >= min");
  if (spacing == GridSpacing::log && points > 1 && !(min > 0.0)) {
    throw PreconditionError("omega grid: log spacing needs min > 0");
  }
  std::vector<double> out(static_cast<std::size_t>(points));
  if (points == 1) {
    out[0] = min;
    return out;
  }
  for (int i = 0; i < points; ++i) {
    const double f = static_cast<double>(i) / (points - 1);
    out[i] = spacing == GridSpacing::log ? min * std::pow(max / min, f) : min + (max - min) * f;
  }
  out.back() = max;
  return out;
}

struct SpectrumPoint {
  double omega = 0.0;
  double y_out = 0.0;
  double r_b = 0.0;
  double n_ad = 0.0;
  bool below_sql = false;
};

struct SpectrumResult {
  SystemParams params;
  EffectiveCouplings couplings;
  NoiseOccupancies occupancies;
  StabilityReport stability;
  std::vector<SpectrumPoint> points;
};

/// Evaluates Y_out (no signal), R_B and N_ad on a grid of angular probe frequencies.
/// Where M1 vanishes N_ad is reported as +inf.
inline SpectrumResult spectrum_scan(const std::vector<double>& omegas, const SystemParams& p,
                                    const EffectiveCouplings& c) {
  if (omegas.empty()) throw PreconditionError("spectrum_scan: empty frequency grid");
  SpectrumResult out;
  out.params = p;
  out.couplings = c;
  out.stability = routh_hurwitz(p, c);
  if (!out.stability.stable) {
    throw InstabilityError("spectrum_scan: parameters are dynamically unstable\n" +
                           out.stability.describe());
  }
  out.occupancies = occupancies(p);
  out.points.reserve(omegas.size());
  for (double w : omegas) {
    const auto t = detail::resolvent_transfer(w, p, c);
    SpectrumPoint pt;
    pt.omega = w;
    pt.y_out = output_spectrum(t, out.occupancies);
    pt.r_b = std::norm(t.m1);
    pt.n_ad = pt.r_b > 0.0 ? (out.occupancies.n_a + 0.5) * std::norm(t.m4) / pt.r_b
                           : std::numeric_limits<double>::infinity();
    pt.below_sql = pt.n_ad < kStandardQuantumLimit;
    out.points.push_back(pt);
  }
  return out;
}

}  // namespace magsense
