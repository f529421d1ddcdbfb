#include <gtest/gtest.h>

#include <random>

#include "magsense/model.hpp"
#include "oracles.hpp"

using namespace magsense;

TEST(ThermalOccupancy, ZeroTemperatureIsExactlyZero) {
  for (double w : {1.0, 1e9, hz_to_angular(37.5e9)}) EXPECT_EQ(thermal_occupancy(w, 0.0), 0.0);
}

TEST(ThermalOccupancy, RoomTemperatureAt37GHz) {
  const double w = hz_to_angular(37.5e9);
  const double n = thermal_occupancy(w, 300.0);
  EXPECT_NEAR(n, 166.2, 0.05);
  // High-temperature expansion k_B T / (hbar w) - 1/2.
  const double classical = constants::k_B * 300.0 / (constants::hbar * w);
  EXPECT_NEAR(classical, 166.7, 0.05);
  EXPECT_NEAR(n, classical - 0.5, 1e-3);
}

TEST(ThermalOccupancy, MillikelvinIsNegligible) {
  const double n = thermal_occupancy(hz_to_angular(37.5e9), 0.05);
  EXPECT_GT(n, 0.0);
  EXPECT_LT(n, 1e-12);
  EXPECT_NEAR(n, 2.3e-16, 0.1e-16);
}

TEST(ThermalOccupancy, OverflowRegimeReturnsZero) {
  EXPECT_EQ(thermal_occupancy(hz_to_angular(37.5e9), 1e-6), 0.0);
}

TEST(ThermalOccupancy, RejectsNonPositiveFrequency) {
  EXPECT_THROW(thermal_occupancy(0.0, 1.0), DomainError);
  EXPECT_THROW(thermal_occupancy(-1.0, 1.0), DomainError);
  EXPECT_THROW(thermal_occupancy(1.0, -1.0), DomainError);
}

TEST(ThermalOccupancy, MonotoneInTemperatureAndFrequency) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> logw(std::log(1e9), std::log(1e12));
  std::uniform_real_distribution<double> logt(std::log(1e-2), std::log(1e3));
  for (int i = 0; i < 2000; ++i) {
    const double w = std::exp(logw(rng)), t = std::exp(logt(rng));
    const double n = thermal_occupancy(w, t);
    if (n < 1e-250) continue;  // underflowed; monotonicity is not resolvable
    EXPECT_GT(thermal_occupancy(w, t * 1.01), n);
    EXPECT_LT(thermal_occupancy(w * 1.01, t), n);
  }
}

TEST(ThermalOccupancy, BoseEinsteinIdentity) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> x(1e-3, 30.0);
  for (int i = 0; i < 2000; ++i) {
    const double t = 1.0;
    const double w = x(rng) * constants::k_B * t / constants::hbar;
    const double e = std::exp(constants::hbar * w / (constants::k_B * t)) - 1.0;
    EXPECT_NEAR(thermal_occupancy(w, t) * e, 1.0, 1e-10);
  }
}

TEST(Calibration, NoFieldNoCoupling) {
  CalibrationInputs in;
  in.n_spins = 1e18;
  EXPECT_EQ(calibrate_couplings(in).g, 0.0);
}

TEST(Calibration, SingleSpinEpsilon) {
  CalibrationInputs in;
  in.n_spins = 1.0;
  const double expected = std::numbers::pi * 28.0e9 * std::sqrt(5.0);
  EXPECT_LT(oracle::rel(calibrate_couplings(in).epsilon, expected), 1e-15);
  EXPECT_LT(oracle::rel(ProbeCoupling::from_spins(constants::gamma_yig, 1.0).epsilon, expected), 1e-15);
}

TEST(Calibration, FormulasByHand) {
  CalibrationInputs in;
  in.n_spins = 4.0e16;
  in.B0 = 2e-6;
  in.B_d = 3e-7;
  in.P_L = 1e-3;
  in.omega_L = hz_to_angular(37.5e9);
  in.kappa_a = hz_to_angular(33e6);
  const auto out = calibrate_couplings(in);
  const double root5n = std::sqrt(5.0 * 4.0e16);
  EXPECT_LT(oracle::rel(out.g, constants::gamma_yig * 2e-6 / 2.0 * root5n), 1e-14);
  EXPECT_LT(oracle::rel(out.E_d, constants::gamma_yig * 3e-7 / 4.0 * root5n), 1e-14);
  EXPECT_LT(oracle::rel(out.E_L, std::sqrt(2.0 * 1e-3 * in.kappa_a / (constants::hbar * in.omega_L))), 1e-14);
}

TEST(Calibration, RoundTrips) {
  const double g = hz_to_angular(375e6);
  const double n = 2.5e17;
  const double b0 = field_for_coupling(g, constants::gamma_yig, n);
  EXPECT_LT(oracle::rel(b0, 2.0 * g / (constants::gamma_yig * std::sqrt(5.0 * n))), 1e-15);
  CalibrationInputs in;
  in.n_spins = n;
  in.B0 = b0;
  EXPECT_LT(oracle::rel(calibrate_couplings(in).g, g), 1e-12);
  EXPECT_LT(oracle::rel(spins_for_coupling(g, constants::gamma_yig, b0), n), 1e-12);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.1, 10.0);
  for (int i = 0; i < 200; ++i) {
    CalibrationInputs r;
    r.n_spins = 1e16 * u(rng);
    r.B0 = 1e-6 * u(rng);
    const double gg = calibrate_couplings(r).g;
    EXPECT_LT(oracle::rel(field_for_coupling(gg, r.gamma, r.n_spins), r.B0), 1e-12);
    EXPECT_LT(oracle::rel(spins_for_coupling(gg, r.gamma, r.B0), r.n_spins), 1e-12);
  }
}

TEST(Calibration, RejectsNegativeInputs) {
  CalibrationInputs in;
  in.B0 = -1.0;
  EXPECT_THROW(calibrate_couplings(in), DomainError);
  CalibrationInputs p;
  p.P_L = 1.0;
  EXPECT_THROW(calibrate_couplings(p), DomainError);
}

TEST(ValidateParams, NominalPointHasNoWarnings) {
  EXPECT_TRUE(validate_params(nominal_system()).empty());
}

TEST(ValidateParams, WeakCoupling) {
  auto p = nominal_system();
  p.g = 0.5 * p.kappa_m;
  const auto w = validate_params(p);
  ASSERT_EQ(w.size(), 1u);
  EXPECT_EQ(w[0], kWeakCoupling);
}

TEST(ValidateParams, CouplingNotSmall) {
  auto p = nominal_system();
  p.g = 0.5 * p.omega_m;
  const auto w = validate_params(p);
  ASSERT_EQ(w.size(), 1u);
  EXPECT_EQ(w[0], kCouplingNotSmall);
}

TEST(NominalSystem, Values) {
  const auto p = nominal_system();
  EXPECT_DOUBLE_EQ(angular_to_hz(p.omega_m), 37.5e9);
  EXPECT_DOUBLE_EQ(p.g, 1e-2 * p.omega_m);
  EXPECT_DOUBLE_EQ(angular_to_hz(p.kappa_m), 15e6);
  EXPECT_DOUBLE_EQ(angular_to_hz(p.kappa_a), 33e6);
  EXPECT_EQ(p.delta_a, 0.0);
  EXPECT_EQ(p.delta_m, 0.0);
  EXPECT_EQ(p.omega_a, p.omega_m);
}
