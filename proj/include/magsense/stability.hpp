/**
 * @file stability.hpp
 * @brief Quadrature drift matrix of the linearized cavity-magnon dynamics and its
 *        Routh-Hurwitz stability test, cross-checked against an eigenvalue oracle.
 *
 * Basis ordering is (X_a, P_a, X_m, P_m). The characteristic polynomial of the drift
 * matrix is s^4 + H3 s^3 + H2 s^2 + H1 s + H0.
 */
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "magsense/errors.hpp"
#include "magsense/model.hpp"
#include "magsense/modulation.hpp"

namespace magsense {

struct DriftMatrix {
  Eigen::Matrix4d m = Eigen::Matrix4d::Zero();

  double operator()(int r, int c) const { return m(r, c); }
  double max_abs_entry() const { return m.cwiseAbs().maxCoeff(); }
};

namespace quadrature {
inline constexpr int Xa = 0;
inline constexpr int Pa = 1;
inline constexpr int Xm = 2;
inline constexpr int Pm = 3;
}  // namespace quadrature

inline DriftMatrix drift_matrix(const SystemParams& p, const EffectiveCouplings& c) {
  using namespace quadrature;
  DriftMatrix d;
  d.m(Xa, Xa) = -0.5 * p.kappa_a;
  d.m(Pa, Pa) = -0.5 * p.kappa_a;
  d.m(Xm, Xm) = -0.5 * p.kappa_m;
  d.m(Pm, Pm) = -0.5 * p.kappa_m;
  d.m(Xa, Pa) = p.delta_a;
  d.m(Pa, Xa) = -p.delta_a;
  d.m(Xm, Pm) = p.delta_m;
  d.m(Pm, Xm) = -p.delta_m;
  d.m(Xa, Pm) = c.g2 - c.g1;
  d.m(Pa, Xm) = -(c.g1 + c.g2);
  d.m(Xm, Pa) = c.g2 - c.g1;
  d.m(Pm, Xa) = -(c.g1 + c.g2);
  return d;
}

/// Largest real part of the eigenvalues of the drift matrix, in rad/s.
inline double eigen_stable(const DriftMatrix& d) {
  const double scale = d.max_abs_entry();
  if (scale == 0.0) return 0.0;
  Eigen::EigenSolver<Eigen::Matrix4d> solver(d.m / scale, false);
  return solver.eigenvalues().real().maxCoeff() * scale;
}

inline constexpr double kBoundaryTolerance = 1e-9;

struct StabilityReport {
  bool stable = false;
  bool marginal = false;  // a criterion or the eigenvalue oracle sits within kBoundaryTolerance
  std::array<double, 4> h{};  // H0..H3 in physical units (rad/s)^(4..1)
  // Normalized to kappa_m: H3, H3 H2 - H1, H3 H2 H1 - (H1^2 + H3^2 H0), and H0.
  std::array<double, 4> criteria{};
  double max_eigen_real = 0.0;  // rad/s

  std::string describe() const {
    std::ostringstream os;
    os << "Routh-Hurwitz: " << (stable ? "stable" : "UNSTABLE") << (marginal ? " (marginal)" : "")
       << "\n  H3 = " << h[3] << "\n  H2 = " << h[2] << "\n  H1 = " << h[1] << "\n  H0 = " << h[0]
       << "\n  criteria (units of kappa_m): H3 = " << criteria[0]
       << ", H3*H2 - H1 = " << criteria[1] << ", H3*H2*H1 - (H1^2 + H3^2*H0) = " << criteria[2]
       << ", H0 = " << criteria[3] << "\n  max Re(eigenvalue) = " << max_eigen_real << " rad/s\n";
    return os.str();
  }
};

namespace detail {

struct Hurwitz {
  double h3, h2, h1, h0;
};

// Coefficients of det(sI - C) for the drift matrix, all rates in a common unit.
inline Hurwitz hurwitz_coefficients(double ka, double km, double da, double dm, double g1,
                                    double g2) {
  const double g1s = g1 * g1, g2s = g2 * g2;
  Hurwitz h{};
  h.h3 = ka + km;
  h.h2 = 2.0 * (g2s - g1s) + da * da + dm * dm + 0.25 * ka * ka + 0.25 * km * km + ka * km;
  h.h1 = -g1s * ka + g2s * ka + dm * dm * ka - g1s * km + g2s * km + da * da * km +
         0.25 * ka * ka * km + 0.25 * ka * km * km;
  h.h0 = g1s * g1s - 2.0 * g1s * g2s + g2s * g2s - 2.0 * g1s * da * dm - 2.0 * g2s * da * dm +
         da * da * dm * dm + 0.25 * dm * dm * ka * ka - 0.5 * g1s * ka * km + 0.5 * g2s * ka * km +
         0.25 * da * da * km * km + ka * ka * km * km / 16.0;
  return h;
}

}  // namespace detail

inline StabilityReport routh_hurwitz(const SystemParams& p, const EffectiveCouplings& c) {
  if (!(p.kappa_m > 0.0) || !(p.kappa_a > 0.0)) throw DomainError("routh_hurwitz: decay rates must be > 0");
  StabilityReport r;
  const double u = p.kappa_m;
  const auto n = detail::hurwitz_coefficients(p.kappa_a / u, 1.0, p.delta_a / u, p.delta_m / u,
                                              c.g1 / u, c.g2 / u);
  r.h = {n.h0 * u * u * u * u, n.h1 * u * u * u, n.h2 * u * u, n.h3 * u};
  r.criteria = {n.h3, n.h3 * n.h2 - n.h1, n.h3 * n.h2 * n.h1 - (n.h1 * n.h1 + n.h3 * n.h3 * n.h0),
                n.h0};
  r.stable = std::all_of(r.criteria.begin(), r.criteria.end(), [](double v) { return v > 0.0; });
  r.max_eigen_real = eigen_stable(drift_matrix(p, c));

  const bool rh_marginal = std::any_of(r.criteria.begin(), r.criteria.end(),
                                       [](double v) { return std::abs(v) < kBoundaryTolerance; });
  const bool eig_marginal = std::abs(r.max_eigen_real / u) < kBoundaryTolerance;
  r.marginal = rh_marginal || eig_marginal;
  if (!r.marginal && r.stable != (r.max_eigen_real < 0.0)) {
    throw ConsistencyError("routh_hurwitz: verdict disagrees with eigenvalue oracle\n" + r.describe());
  }
  return r;
}

enum class GridParameter { lambda1, lambda2, delta_a, delta_m, g };

inline const char* to_string(GridParameter p) {
  switch (p) {
    case GridParameter::lambda1: return "lambda1";
    case GridParameter::lambda2: return "lambda2";
    case GridParameter::delta_a: return "delta_a";
    case GridParameter::delta_m: return "delta_m";
    case GridParameter::g: return "g";
  }
  return "?";
}

inline GridParameter grid_parameter_from_string(const std::string& s) {
  for (auto p : {GridParameter::lambda1, GridParameter::lambda2, GridParameter::delta_a,
                 GridParameter::delta_m, GridParameter::g}) {
    if (s == to_string(p)) return p;
  }
  throw PreconditionError("unknown grid parameter '" + s + "'");
}

/// One axis of a stability map. Detunings and g are angular frequencies.
struct GridAxis {
  GridParameter parameter = GridParameter::lambda2;
  std::vector<double> values;
};

/// Applies a grid value. The drives follow the detunings so the modulation stays matched.
inline void apply_parameter(GridParameter which, double value, SystemParams& p,
                            ModulationSettings& m) {
  switch (which) {
    case GridParameter::lambda1: m.lambda1 = value; break;
    case GridParameter::lambda2: m.lambda2 = value; break;
    case GridParameter::delta_a: p.delta_a = value; break;
    case GridParameter::delta_m: p.delta_m = value; break;
    case GridParameter::g: p.g = value; break;
  }
  if (which == GridParameter::delta_a || which == GridParameter::delta_m) {
    m = ModulationSettings::matched_to(m.lambda1, m.lambda2, p.omega_a - p.delta_a,
                                       p.omega_m - p.delta_m);
  }
}

/// Row-major boolean grid: stable[i][j] for axis1.values[i], axis2.values[j].
struct StabilityGrid {
  GridAxis axis1, axis2;
  std::vector<std::vector<bool>> stable;
};

inline StabilityGrid stability_map(const SystemParams& base, const ModulationSettings& mod,
                                   const GridAxis& axis1, const GridAxis& axis2) {
  if (axis1.values.empty() || axis2.values.empty()) {
    throw PreconditionError("stability_map: grid axes must be nonempty");
  }
  StabilityGrid grid{axis1, axis2, {}};
  grid.stable.assign(axis1.values.size(), std::vector<bool>(axis2.values.size(), false));
  for (std::size_t i = 0; i < axis1.values.size(); ++i) {
    for (std::size_t j = 0; j < axis2.values.size(); ++j) {
      SystemParams p = base;
      ModulationSettings m = mod;
      apply_parameter(axis1.parameter, axis1.values[i], p, m);
      apply_parameter(axis2.parameter, axis2.values[j], p, m);
      grid.stable[i][j] = routh_hurwitz(p, effective_couplings(p.g, m)).stable;
    }
  }
  return grid;
}

}  // namespace magsense
