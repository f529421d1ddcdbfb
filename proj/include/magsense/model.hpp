/**
 * @file model.hpp
 * @brief Physical parameters of the cavity-magnon sensor, thermal occupancies and
 *        calibration helpers that map laboratory quantities onto model rates.
 *
 * Every frequency and rate is an angular frequency in rad/s. Conversion from the
 * "/2pi" Hz values used in configuration files happens once, in config.hpp.
 */
#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "magsense/errors.hpp"

namespace magsense {

namespace constants {
inline constexpr double hbar = 1.054571817e-34;  // J s
inline constexpr double k_B = 1.380649e-23;      // J / K
inline constexpr double two_pi = 2.0 * std::numbers::pi;
// Gyromagnetic ratio of YIG, gamma / 2pi = 28 GHz/T.
inline constexpr double gamma_yig = two_pi * 28.0e9;  // rad s^-1 T^-1
}  // namespace constants

inline constexpr double hz_to_angular(double hz) { return constants::two_pi * hz; }
inline constexpr double angular_to_hz(double omega) { return omega / constants::two_pi; }

struct SystemParams {
  double omega_m = 0.0;      // magnon (Kittel) frequency
  double omega_a = 0.0;      // cavity frequency
  double delta_a = 0.0;      // omega_a - omega_L
  double delta_m = 0.0;      // omega_m - omega_d
  double kappa_a = 0.0;      // cavity energy decay rate
  double kappa_m = 0.0;      // magnon decay rate
  double g = 0.0;            // bare cavity-magnon coupling
  double temperature = 0.0;  // K
};

struct NoiseOccupancies {
  double n_a = 0.0;
  double n_m = 0.0;
};

struct ProbeCoupling {
  double gamma = 0.0;    // rad s^-1 T^-1
  double n_spins = 0.0;  // total spin count N
  double epsilon = 0.0;  // (gamma / 2) sqrt(5 N), rad s^-1 T^-1

  static ProbeCoupling from_spins(double gamma, double n_spins) {
    if (gamma < 0.0 || n_spins < 0.0) throw DomainError("ProbeCoupling: gamma and n_spins must be >= 0");
    return {gamma, n_spins, 0.5 * gamma * std::sqrt(5.0 * n_spins)};
  }
};

/// Nominal operating point, as /2pi values in Hz: omega_m = 37.5 GHz, g = 0.01 omega_m,
/// kappa_m = 15 MHz, kappa_a = 33 MHz, zero detunings, T = 50 mK.
namespace nominal {
inline constexpr double omega_m_hz = 37.5e9;
inline constexpr double g_hz = 375.0e6;
inline constexpr double kappa_m_hz = 15.0e6;
inline constexpr double kappa_a_hz = 33.0e6;
inline constexpr double temperature = 0.05;
inline constexpr double lambda1 = 0.16;
inline constexpr double lambda2_ratio = 0.95;
}  // namespace nominal

/// Nominal operating point. The cavity frequency defaults to omega_m (resonant cavity).
inline SystemParams nominal_system() {
  SystemParams p;
  p.omega_m = hz_to_angular(nominal::omega_m_hz);
  p.omega_a = p.omega_m;
  p.g = hz_to_angular(nominal::g_hz);
  p.kappa_m = hz_to_angular(nominal::kappa_m_hz);
  p.kappa_a = hz_to_angular(nominal::kappa_a_hz);
  p.temperature = nominal::temperature;
  return p;
}

/// Bose-Einstein occupancy 1/(exp(hbar omega / k_B T) - 1).
/// Returns exactly 0 at T = 0 and when the exponent exceeds 700.
inline double thermal_occupancy(double omega, double temperature) {
  if (!(omega > 0.0)) throw DomainError("thermal_occupancy: omega must be > 0");
  if (temperature < 0.0) throw DomainError("thermal_occupancy: temperature must be >= 0");
  if (temperature == 0.0) return 0.0;
  const double x = constants::hbar * omega / (constants::k_B * temperature);
  if (x > 700.0) return 0.0;
  return 1.0 / std::expm1(x);
}

inline NoiseOccupancies occupancies(const SystemParams& p) {
  return {thermal_occupancy(p.omega_a, p.temperature), thermal_occupancy(p.omega_m, p.temperature)};
}

struct CalibratedCouplings {
  double g = 0.0;        // (gamma B0 / 2) sqrt(5N)
  double E_d = 0.0;      // (gamma B_d / 4) sqrt(5N)
  double E_L = 0.0;      // sqrt(2 P_L kappa_a / (hbar omega_L))
  double epsilon = 0.0;  // (gamma / 2) sqrt(5N)
};

struct CalibrationInputs {
  double gamma = constants::gamma_yig;
  double n_spins = 0.0;
  double B0 = 0.0;       // microwave field amplitude, T
  double B_d = 0.0;      // magnon drive field, T
  double P_L = 0.0;      // cavity drive power, W
  double omega_L = 0.0;  // cavity drive frequency, rad/s
  double kappa_a = 0.0;
};

inline CalibratedCouplings calibrate_couplings(const CalibrationInputs& in) {
  if (in.gamma < 0.0 || in.n_spins < 0.0 || in.B0 < 0.0 || in.B_d < 0.0 || in.P_L < 0.0 ||
      in.omega_L < 0.0 || in.kappa_a < 0.0) {
    throw DomainError("calibrate_couplings: inputs must be non-negative");
  }
  if (in.P_L > 0.0 && !(in.omega_L > 0.0)) {
    throw DomainError("calibrate_couplings: omega_L must be > 0 when P_L > 0");
  }
  const double root = std::sqrt(5.0 * in.n_spins);
  CalibratedCouplings out;
  out.g = 0.5 * in.gamma * in.B0 * root;
  out.E_d = 0.25 * in.gamma * in.B_d * root;
  out.E_L = in.P_L > 0.0 ? std::sqrt(2.0 * in.P_L * in.kappa_a / (constants::hbar * in.omega_L)) : 0.0;
  out.epsilon = 0.5 * in.gamma * root;
  return out;
}

/// Microwave amplitude B0 that produces bare coupling g for a given spin count.
inline double field_for_coupling(double g, double gamma, double n_spins) {
  if (g < 0.0 || !(gamma > 0.0) || !(n_spins > 0.0)) {
    throw DomainError("field_for_coupling: need g >= 0, gamma > 0, n_spins > 0");
  }
  return 2.0 * g / (gamma * std::sqrt(5.0 * n_spins));
}

/// Spin count that produces bare coupling g at microwave amplitude B0.
inline double spins_for_coupling(double g, double gamma, double B0) {
  if (g < 0.0 || !(gamma > 0.0) || !(B0 > 0.0)) {
    throw DomainError("spins_for_coupling: need g >= 0, gamma > 0, B0 > 0");
  }
  const double root = 2.0 * g / (gamma * B0);
  return root * root / 5.0;
}

inline constexpr const char* kWeakCoupling = "not in strong coupling regime";
inline constexpr const char* kCouplingNotSmall = "g not << omega_m";

/// Non-fatal regime checks: kappa_a, kappa_m < g << omega_m ("<<" taken as a factor of 10).
inline std::vector<std::string> validate_params(const SystemParams& p) {
  std::vector<std::string> warnings;
  if (!(p.kappa_a > 0.0) || !(p.kappa_m > 0.0)) warnings.emplace_back("decay rates must be > 0");
  if (p.g < 0.0) warnings.emplace_back("g must be >= 0");
  if (p.temperature < 0.0) warnings.emplace_back("temperature must be >= 0");
  if (!(p.g > p.kappa_a && p.g > p.kappa_m)) warnings.emplace_back(kWeakCoupling);
  if (!(10.0 * p.g <= p.omega_m)) warnings.emplace_back(kCouplingNotSmall);
  return warnings;
}

}  // namespace magsense
