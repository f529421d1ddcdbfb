/**
 * @file timedomain.hpp
 * @brief Stochastic time-domain oracle for the linearized sensor.
 *
 * The quantum Langevin equations are linear with Gaussian inputs, so symmetrized output
 * statistics are reproduced exactly by the classical SDE
 *
 *   dV = C V dt + B dW,   B = diag(sqrt(ka), sqrt(ka), sqrt(km), sqrt(km)),
 *
 * whose Wiener increments have variance (n + 1/2) dt per quadrature. The phase-quadrature
 * output sqrt(ka) P_a - p_a^in reuses the increment that drove P_a in the same step.
 */
#pragma once

#include <fftw3.h>

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <iomanip>
#include <memory>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "magsense/errors.hpp"
#include "magsense/model.hpp"
#include "magsense/modulation.hpp"
#include "magsense/spectra.hpp"
#include "magsense/stability.hpp"

namespace magsense {

struct SdeConfig {
  double dt = 0.0;        // integration step, s
  double duration = 0.0;  // total simulated time, s
  double burn_in = 0.0;   // discarded initial time, s
  std::uint64_t seed = 42;
  int segments = 256;     // Welch segments
  double segment_overlap = 0.5;
  // Output samples are averages of the per-step output over this many steps. The average of
  // white input noise stays white with the same density, so the PSD normalization is unchanged.
  int output_stride = 1;
  bool noise = true;      // false: deterministic run (tone-gain measurements)

  double sample_interval() const { return dt * output_stride; }
};

/// Stiffness bound on dt times the largest drift-matrix entry.
inline constexpr double kStiffnessLimit = 0.1;

/// Defaults: dt = 1e-3 / (fastest rate), 2e4 / kappa_m of data after burn-in, 256 Hann segments
/// at 50% overlap, output averaged over ~0.02 / kappa_m.
inline SdeConfig default_sde_config(const SystemParams& p, const EffectiveCouplings& c) {
  const double fastest = std::max({p.kappa_a, p.kappa_m, std::abs(c.g1) + std::abs(c.g2),
                                   std::abs(p.delta_a), std::abs(p.delta_m)});
  SdeConfig cfg;
  cfg.dt = 1e-3 / fastest;
  cfg.output_stride = std::max(1, static_cast<int>(std::lround(0.02 / p.kappa_m / cfg.dt)));
  cfg.burn_in = 100.0 / p.kappa_m;
  cfg.duration = cfg.burn_in + 2.0e4 / p.kappa_m;
  return cfg;
}

/// Largest dt that satisfies the stiffness guard.
inline double max_stable_dt(const DriftMatrix& d) { return kStiffnessLimit / d.max_abs_entry(); }

inline void validate(const SdeConfig& cfg, const DriftMatrix& d) {
  if (!(cfg.dt > 0.0)) throw PreconditionError("SdeConfig: dt must be > 0");
  if (!(cfg.dt * d.max_abs_entry() < kStiffnessLimit)) {
    std::ostringstream msg;
    msg << "SdeConfig: stiffness guard violated (dt * max|C| >= 0.1); use dt < "
        << std::setprecision(6) << max_stable_dt(d) << " s";
    throw StiffnessError(msg.str());
  }
  if (!(cfg.duration > cfg.burn_in) || cfg.burn_in < 0.0) {
    throw PreconditionError("SdeConfig: need duration > burn_in >= 0");
  }
  if (cfg.segments < 1) throw PreconditionError("SdeConfig: segments must be >= 1");
  if (!(cfg.segment_overlap >= 0.0 && cfg.segment_overlap < 1.0)) {
    throw PreconditionError("SdeConfig: segment_overlap must be in [0, 1)");
  }
  if (cfg.output_stride < 1) throw PreconditionError("SdeConfig: output_stride must be >= 1");
}

enum class SignalKind { none, tone };
enum class SignalChannel { x_m, p_m };

/// Deterministic drive amplitude * cos(omega_s t) added to a magnon input quadrature.
struct SignalSpec {
  SignalKind kind = SignalKind::none;
  double amplitude = 0.0;
  double omega_s = 0.0;
  SignalChannel channel = SignalChannel::x_m;
};

struct Trajectory {
  double sample_interval = 0.0;     // s
  double start_time = 0.0;          // time at the start of the first output sample, s
  std::vector<double> output;       // phase-quadrature output samples (block averages)
  Eigen::Matrix4d covariance = Eigen::Matrix4d::Zero();  // time average of V V^T
  Eigen::Matrix4d covariance_stderr = Eigen::Matrix4d::Zero();  // batch-means error
};

/// Euler-Maruyama integration of the quadrature Langevin equations from V = 0.
/// Samples before burn_in are discarded. Deterministic for a given seed.
inline Trajectory simulate(const SystemParams& p, const EffectiveCouplings& c,
                           const NoiseOccupancies& n, const SdeConfig& cfg,
                           const SignalSpec& signal = {}) {
  const DriftMatrix drift = drift_matrix(p, c);
  validate(cfg, drift);
  if (signal.amplitude < 0.0) throw DomainError("simulate: signal amplitude must be >= 0");
  const auto report = routh_hurwitz(p, c);
  if (!report.stable) throw InstabilityError("simulate: unstable parameters\n" + report.describe());

  const double dt = cfg.dt;
  const auto total_steps = static_cast<std::int64_t>(std::llround(cfg.duration / dt));
  const auto burn_steps = static_cast<std::int64_t>(std::llround(cfg.burn_in / dt));
  const int stride = cfg.output_stride;
  const std::int64_t n_out = (total_steps - burn_steps) / stride;
  if (n_out < 1) throw PreconditionError("simulate: no output samples after burn-in");

  const double sqrt_ka = std::sqrt(p.kappa_a), sqrt_km = std::sqrt(p.kappa_m);
  const double sd_a = cfg.noise ? std::sqrt((n.n_a + 0.5) * dt) : 0.0;
  const double sd_m = cfg.noise ? std::sqrt((n.n_m + 0.5) * dt) : 0.0;
  const double tone_amp = signal.kind == SignalKind::tone ? sqrt_km * signal.amplitude * dt : 0.0;
  const int tone_row = signal.channel == SignalChannel::x_m ? quadrature::Xm : quadrature::Pm;

  // Propagator for the deterministic part: V <- (I + C dt) V.
  const Eigen::Matrix4d step = Eigen::Matrix4d::Identity() + drift.m * dt;

  // Boost's ziggurat sampler is platform-independent, unlike std::normal_distribution.
  boost::random::mt19937_64 rng(cfg.seed);
  boost::random::normal_distribution<double> normal(0.0, 1.0);

  Trajectory traj;
  traj.sample_interval = stride * dt;
  traj.start_time = static_cast<double>(burn_steps) * dt;
  traj.output.reserve(static_cast<std::size_t>(n_out));

  constexpr int kBatches = 64;
  const std::int64_t per_batch = std::max<std::int64_t>(1, n_out / kBatches);
  std::vector<Eigen::Matrix4d> batch_sums;
  Eigen::Matrix4d batch_acc = Eigen::Matrix4d::Zero();
  std::int64_t batch_count = 0;

  Eigen::Vector4d v = Eigen::Vector4d::Zero();
  double block = 0.0;
  int in_block = 0;
  const std::int64_t end_step = burn_steps + n_out * stride;
  for (std::int64_t k = 0; k < end_step; ++k) {
    Eigen::Vector4d dw = Eigen::Vector4d::Zero();
    if (cfg.noise) {
      dw(0) = sd_a * normal(rng);
      dw(1) = sd_a * normal(rng);
      dw(2) = sd_m * normal(rng);
      dw(3) = sd_m * normal(rng);
    }
    const double y = sqrt_ka * v(quadrature::Pa) - dw(1) / dt;
    Eigen::Vector4d next = step * v;
    next(0) += sqrt_ka * dw(0);
    next(1) += sqrt_ka * dw(1);
    next(2) += sqrt_km * dw(2);
    next(3) += sqrt_km * dw(3);
    if (tone_amp != 0.0) next(tone_row) += tone_amp * std::cos(signal.omega_s * k * dt);

    if (k >= burn_steps) {
      if (in_block == 0) {
        batch_acc += v * v.transpose();
        if (++batch_count == per_batch) {
          batch_sums.push_back(batch_acc / static_cast<double>(batch_count));
          batch_acc.setZero();
          batch_count = 0;
        }
      }
      block += y;
      if (++in_block == stride) {
        traj.output.push_back(block / stride);
        block = 0.0;
        in_block = 0;
      }
    }
    v = next;
  }

  const auto nb = static_cast<double>(batch_sums.size());
  Eigen::Matrix4d mean = Eigen::Matrix4d::Zero();
  for (const auto& b : batch_sums) mean += b;
  mean /= nb;
  Eigen::Matrix4d var = Eigen::Matrix4d::Zero();
  for (const auto& b : batch_sums) var += (b - mean).cwiseAbs2();
  traj.covariance = mean;
  traj.covariance_stderr = nb > 1 ? (var / (nb - 1.0) / nb).cwiseSqrt().eval()
                                  : Eigen::Matrix4d::Zero().eval();
  return traj;
}

struct PsdEstimate {
  std::vector<double> omega;   // rad/s, bins 0 .. nperseg/2
  std::vector<double> psd;     // two-sided symmetrized density
  std::vector<double> std_error;  // inter-segment standard error of the mean
  int segments = 0;
  int samples_per_segment = 0;
  double sample_interval = 0.0;
};

namespace detail {

class RealFft {
 public:
  explicit RealFft(int n)
      : n_(n),
        in_(fftw_alloc_real(static_cast<std::size_t>(n))),
        out_(fftw_alloc_complex(static_cast<std::size_t>(n / 2 + 1))),
        plan_(fftw_plan_dft_r2c_1d(n, in_, out_, FFTW_ESTIMATE)) {}
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;
  ~RealFft() {
    fftw_destroy_plan(plan_);
    fftw_free(out_);
    fftw_free(in_);
  }

  double* input() { return in_; }
  void execute() { fftw_execute(plan_); }
  double norm(int k) const { return out_[k][0] * out_[k][0] + out_[k][1] * out_[k][1]; }
  int size() const { return n_; }

 private:
  int n_;
  double* in_;
  fftw_complex* out_;
  fftw_plan plan_;
};

inline std::vector<double> hann(int n) {
  std::vector<double> w(static_cast<std::size_t>(n));
  // Periodic Hann: tiles to a constant at 50% overlap.
  for (int i = 0; i < n; ++i) w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n);
  return w;
}

}  // namespace detail

/// Welch estimate of the two-sided density of a real series of rate samples spaced by
/// sample_interval. White samples of variance s^2 / sample_interval give a flat density s^2.
inline PsdEstimate estimate_psd(const std::vector<double>& series, double sample_interval,
                                int segments, double overlap) {
  if (!(sample_interval > 0.0)) throw PreconditionError("estimate_psd: sample_interval must be > 0");
  if (segments < 1) throw PreconditionError("estimate_psd: segments must be >= 1");
  if (!(overlap >= 0.0 && overlap < 1.0)) throw PreconditionError("estimate_psd: overlap must be in [0, 1)");
  const auto n = static_cast<double>(series.size());
  const int nperseg = static_cast<int>(std::floor(n / (1.0 + (segments - 1) * (1.0 - overlap))));
  if (nperseg < 16) throw PreconditionError("estimate_psd: series too short for the requested segments");
  const int hop = std::max(1, static_cast<int>(std::floor(nperseg * (1.0 - overlap))));

  const auto window = detail::hann(nperseg);
  double wss = 0.0;
  for (double w : window) wss += w * w;
  const double scale = sample_interval / wss;
  const int nbins = nperseg / 2 + 1;

  detail::RealFft fft(nperseg);
  std::vector<double> sum(nbins, 0.0), sum_sq(nbins, 0.0);
  for (int s = 0; s < segments; ++s) {
    const auto start = static_cast<std::size_t>(s) * static_cast<std::size_t>(hop);
    double* in = fft.input();
    for (int i = 0; i < nperseg; ++i) in[i] = series[start + i] * window[i];
    fft.execute();
    for (int k = 0; k < nbins; ++k) {
      const double p = fft.norm(k) * scale;
      sum[k] += p;
      sum_sq[k] += p * p;
    }
  }

  PsdEstimate est;
  est.segments = segments;
  est.samples_per_segment = nperseg;
  est.sample_interval = sample_interval;
  const double d_omega = 2.0 * std::numbers::pi / (nperseg * sample_interval);
  est.omega.resize(nbins);
  est.psd.resize(nbins);
  est.std_error.resize(nbins);
  for (int k = 0; k < nbins; ++k) {
    const double mean = sum[k] / segments;
    const double var = segments > 1 ? std::max(0.0, (sum_sq[k] - segments * mean * mean) / (segments - 1)) : 0.0;
    est.omega[k] = k * d_omega;
    est.psd[k] = mean;
    est.std_error[k] = std::sqrt(var / segments);
  }
  return est;
}

inline PsdEstimate estimate_psd(const Trajectory& traj, const SdeConfig& cfg) {
  return estimate_psd(traj.output, traj.sample_interval, cfg.segments, cfg.segment_overlap);
}

/// Power carried by bins with lo <= |omega| <= hi, i.e. the integral of the two-sided
/// density over both signs of frequency divided by 2 pi.
inline double integrated_power(const PsdEstimate& est, double lo, double hi) {
  if (est.omega.size() < 2) return 0.0;
  const double d_omega = est.omega[1] - est.omega[0];
  const std::size_t last = est.omega.size() - 1;
  const bool even = est.samples_per_segment % 2 == 0;
  double total = 0.0;
  for (std::size_t k = 0; k < est.omega.size(); ++k) {
    if (est.omega[k] < lo || est.omega[k] > hi) continue;
    const bool single = k == 0 || (even && k == last);
    total += (single ? 1.0 : 2.0) * est.psd[k];
  }
  return total * d_omega / (2.0 * std::numbers::pi);
}

/// Steady-state covariance from C V + V C^T + D = 0 with
/// D = diag(ka (n_a + 1/2), ka (n_a + 1/2), km (n_m + 1/2), km (n_m + 1/2)).
inline Eigen::Matrix4d steady_covariance(const DriftMatrix& drift, const NoiseOccupancies& n,
                                         double kappa_a, double kappa_m) {
  if (!(eigen_stable(drift) < 0.0)) {
    throw InstabilityError("steady_covariance: drift matrix is not Hurwitz");
  }
  const double u = kappa_m;
  const Eigen::Matrix4d c = drift.m / u;
  Eigen::Matrix4d d = Eigen::Matrix4d::Zero();
  d(0, 0) = d(1, 1) = kappa_a / u * (n.n_a + 0.5);
  d(2, 2) = d(3, 3) = kappa_m / u * (n.n_m + 0.5);

  // Column-major vec: vec(C V) = (I kron C) vec V, vec(V C^T) = (C kron I) vec V.
  Eigen::Matrix<double, 16, 16> k = Eigen::Matrix<double, 16, 16>::Zero();
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      for (int a = 0; a < 4; ++a) {
        k(4 * i + a, 4 * i + j) += c(a, j);  // I kron C
        k(4 * i + a, 4 * j + a) += c(i, j);  // C kron I
      }
    }
  }
  Eigen::Matrix<double, 16, 1> rhs;
  for (int col = 0; col < 4; ++col) {
    for (int row = 0; row < 4; ++row) rhs(4 * col + row) = -d(row, col);
  }
  const Eigen::Matrix<double, 16, 1> x = k.fullPivLu().solve(rhs);
  Eigen::Matrix4d v;
  for (int col = 0; col < 4; ++col) {
    for (int row = 0; row < 4; ++row) v(row, col) = x(4 * col + row);
  }
  v = 0.5 * (v + v.transpose()).eval();
  const double residual = (c * v + v * c.transpose() + d).norm();
  if (residual > 1e-10 * d.norm()) {
    throw ConsistencyError("steady_covariance: Lyapunov residual too large");
  }
  return v;
}

struct ToneGain {
  double gain = 0.0;      // measured output amplitude / input amplitude
  double expected = 0.0;  // |M1(omega_s)| (x_m channel) or |M2(omega_s)| (p_m channel)
  double relative_error() const {
    return expected > 0.0 ? std::abs(gain - expected) / expected : std::abs(gain);
  }
};

/// Least-squares amplitude of a cos(w t) + b sin(w t) + offset fitted to block-averaged samples,
/// with the boxcar attenuation sinc(w T / 2) divided out.
inline double fit_tone_amplitude(const std::vector<double>& y, double start_time,
                                 double sample_interval, double omega) {
  Eigen::Matrix3d ata = Eigen::Matrix3d::Zero();
  Eigen::Vector3d aty = Eigen::Vector3d::Zero();
  for (std::size_t j = 0; j < y.size(); ++j) {
    const double t = start_time + (static_cast<double>(j) + 0.5) * sample_interval;
    const Eigen::Vector3d row(std::cos(omega * t), std::sin(omega * t), 1.0);
    ata += row * row.transpose();
    aty += row * y[j];
  }
  const Eigen::Vector3d coef = ata.ldlt().solve(aty);
  const double half = 0.5 * omega * sample_interval;
  const double sinc = half == 0.0 ? 1.0 : std::sin(half) / half;
  return std::hypot(coef(0), coef(1)) / sinc;
}

/// Noise-free tone injection: output amplitude / input amplitude after transients.
inline ToneGain measure_tone_gain(const SystemParams& p, const EffectiveCouplings& c,
                                  double omega_s, double amplitude,
                                  SignalChannel channel = SignalChannel::x_m) {
  if (!(amplitude > 0.0)) throw DomainError("measure_tone_gain: amplitude must be > 0");
  if (!(omega_s > 0.0)) throw DomainError("measure_tone_gain: tone frequency must be > 0");
  const auto report = routh_hurwitz(p, c);
  if (!report.stable) throw InstabilityError("measure_tone_gain: unstable parameters\n" + report.describe());

  SdeConfig cfg = default_sde_config(p, c);
  cfg.noise = false;
  if (omega_s >= std::numbers::pi / cfg.dt) {
    throw PreconditionError("measure_tone_gain: tone frequency above the Nyquist limit pi/dt");
  }
  const double decay = std::max(std::abs(report.max_eigen_real), 1e-3 * p.kappa_m);
  const double period = 2.0 * std::numbers::pi / omega_s;
  cfg.burn_in = 40.0 / decay;
  const double window = std::max(4.0, std::ceil(50.0 / p.kappa_m / period)) * period;
  cfg.duration = cfg.burn_in + window;
  // Blocks of ~1/200 of a period keep the stored series short.
  cfg.output_stride = std::max(1, static_cast<int>(std::floor(period / 200.0 / cfg.dt)));

  SignalSpec tone{SignalKind::tone, amplitude, omega_s, channel};
  const auto traj = simulate(p, c, NoiseOccupancies{}, cfg, tone);
  ToneGain g;
  g.gain = fit_tone_amplitude(traj.output, traj.start_time, traj.sample_interval, omega_s) / amplitude;
  const auto t = detail::resolvent_transfer(omega_s, p, c);
  g.expected = std::abs(channel == SignalChannel::x_m ? t.m1 : t.m2);
  return g;
}

}  // namespace magsense
