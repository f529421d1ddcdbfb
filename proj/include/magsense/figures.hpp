/**
 * @file figures.hpp
 * @brief Parameter bundles and data for the published figure set, with a reproduction report
 *        that sets each quantitative claim next to the computed value.
 *
 * Each figure is a wide table: one abscissa column and one column per curve. Every curve's
 * parameter set is stability-checked before evaluation. Verdicts are MATCH when the computed
 * value agrees with the quoted one to the precision it was quoted at, DISCREPANCY otherwise.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "magsense/errors.hpp"
#include "magsense/model.hpp"
#include "magsense/modulation.hpp"
#include "magsense/spectra.hpp"
#include "magsense/stability.hpp"

namespace magsense::figures {

using json = nlohmann::json;

struct Anchor {
  std::string claim;   // the published statement, paraphrased
  std::string quoted;  // the published value or relation
  double computed = 0.0;
  bool match = false;
  std::string note;  // how the comparison was made
};

struct Curve {
  std::string label;
  SystemParams params;
  EffectiveCouplings couplings;
  std::optional<ModulationSettings> modulation;  // unset for hand-set couplings
  StabilityReport stability;
};

struct FigureData {
  std::string id;
  std::string title;
  std::string x_label;
  std::vector<std::string> columns;  // curve column names
  std::vector<double> x;
  std::vector<std::vector<double>> y;  // y[curve][i]
  std::vector<Curve> curves;
  std::vector<Anchor> anchors;
};

inline const std::vector<std::string>& figure_ids() {
  static const std::vector<std::string> ids = {"fig2a", "fig2b", "fig3a", "fig3b",
                                               "fig4a", "fig4b", "fig7a", "fig7b"};
  return ids;
}

// Anti-rotating-only index: small enough that the squeezing-only dynamics stay stable
// (g1 below sqrt(kappa_a kappa_m)/2) with R_B(0) = 4v/(1-v)^2 <= 1.
inline constexpr double kAntiRotatingLambda2 = 0.018;
inline constexpr double kFig3Ratios[] = {0.0, 0.3, 0.6, 0.95};
inline constexpr double kReferenceCooperativities[] = {10.0, 100.0, 1000.0};

namespace detail {

inline std::string ratio_label(double r) {
  std::ostringstream os;
  os << "lambda2_ratio_" << r;
  return os.str();
}

inline Curve modulated_curve(std::string label, SystemParams p, double lambda1, double lambda2) {
  Curve c;
  c.label = std::move(label);
  c.params = p;
  c.modulation = ModulationSettings::matched_to(lambda1, lambda2, p.omega_a - p.delta_a,
                                                p.omega_m - p.delta_m);
  c.couplings = effective_couplings(p.g, *c.modulation);
  return c;
}

inline Curve fixed_curve(std::string label, SystemParams p, EffectiveCouplings k) {
  Curve c;
  c.label = std::move(label);
  c.params = p;
  c.couplings = k;
  return c;
}

inline void check(Curve& c) {
  c.stability = routh_hurwitz(c.params, c.couplings);
  if (!c.stability.stable) {
    throw InstabilityError("figure bundle '" + c.label + "' is unstable\n" + c.stability.describe());
  }
}

enum class Quantity { r_b, n_ad };

inline double evaluate(const Curve& c, double omega, Quantity q) {
  const auto t = magsense::detail::resolvent_transfer(omega, c.params, c.couplings);
  if (q == Quantity::r_b) return std::norm(t.m1);
  const double rb = std::norm(t.m1);
  return rb > 0.0 ? (occupancies(c.params).n_a + 0.5) * std::norm(t.m4) / rb
                  : std::numeric_limits<double>::infinity();
}

inline void fill_spectrum(FigureData& f, Quantity q) {
  for (auto& c : f.curves) {
    check(c);
    f.columns.push_back(c.label);
    std::vector<double> col;
    col.reserve(f.x.size());
    for (double x : f.x) col.push_back(evaluate(c, x * c.params.kappa_m, q));
    f.y.push_back(std::move(col));
  }
}

/// MATCH when |computed - quoted| is within half a unit of the last quoted digit.
inline Anchor quoted_value(std::string claim, std::string quoted, double quoted_value,
                           double last_digit, double computed) {
  Anchor a;
  a.claim = std::move(claim);
  a.quoted = std::move(quoted);
  a.computed = computed;
  a.match = std::abs(computed - quoted_value) <= 0.5 * last_digit * (1.0 + 1e-12);
  std::ostringstream os;
  os << "MATCH if within " << 0.5 * last_digit << " of " << quoted_value
     << " (half a unit of the last quoted digit)";
  a.note = os.str();
  return a;
}

inline Anchor relation(std::string claim, std::string quoted, double computed, bool holds,
                       std::string note) {
  return {std::move(claim), std::move(quoted), computed, holds, std::move(note)};
}

inline const std::vector<double>& column(const FigureData& f, const std::string& label) {
  for (std::size_t i = 0; i < f.columns.size(); ++i) {
    if (f.columns[i] == label) return f.y[i];
  }
  throw std::logic_error("missing column " + label);
}

inline const Curve& curve(const FigureData& f, const std::string& label) {
  for (const auto& c : f.curves) {
    if (c.label == label) return c;
  }
  throw std::logic_error("missing curve " + label);
}

/// Interior local minima of N_ad for omega/kappa_m in [lo, hi] on a fine log grid.
inline std::vector<double> local_minima(const Curve& c, double lo, double hi, int points = 2001) {
  const auto xs = omega_grid_over_kappa_m(lo, hi, points, GridSpacing::log);
  std::vector<double> ys;
  ys.reserve(xs.size());
  for (double x : xs) ys.push_back(evaluate(c, x * c.params.kappa_m, Quantity::n_ad));
  std::vector<double> out;
  for (std::size_t i = 1; i + 1 < ys.size(); ++i) {
    if (ys[i] < ys[i - 1] && ys[i] <= ys[i + 1]) out.push_back(xs[i]);
  }
  return out;
}

inline std::vector<Curve> ratio_family(const SystemParams& p, bool with_equal_weights) {
  std::vector<Curve> out;
  for (double r : kFig3Ratios) {
    out.push_back(modulated_curve(ratio_label(r), p, nominal::lambda1, r * nominal::lambda1));
  }
  if (with_equal_weights) {
    out.push_back(modulated_curve(ratio_label(1.0), p, nominal::lambda1, nominal::lambda1));
  }
  return out;
}

inline Curve rotating_only(const SystemParams& p) {
  return modulated_curve("rotating_only", p, nominal::lambda1, 0.0);
}

inline Curve anti_rotating_only(const SystemParams& p) {
  return modulated_curve("anti_rotating_only", p, 0.0, kAntiRotatingLambda2);
}

inline Curve headline(const SystemParams& p) {
  return modulated_curve("this_scheme", p, nominal::lambda1,
                         nominal::lambda2_ratio * nominal::lambda1);
}

// ---------------------------------------------------------------------------------------------

inline FigureData fig2(bool noise) {
  const SystemParams p = nominal_system();
  FigureData f;
  f.id = noise ? "fig2b" : "fig2a";
  f.title = noise ? "Additional noise N_ad, rotating-only vs anti-rotating-only coupling"
                  : "Response R_B, rotating-only vs anti-rotating-only coupling";
  f.x_label = "omega_over_kappa_m";
  f.x = omega_grid_over_kappa_m(0.0, 5.0, 251, GridSpacing::linear);
  f.curves = {rotating_only(p), anti_rotating_only(p)};
  fill_spectrum(f, noise ? Quantity::n_ad : Quantity::r_b);

  const auto& rot = column(f, "rotating_only");
  const auto& anti = column(f, "anti_rotating_only");
  if (!noise) {
    const double peak = std::max(*std::max_element(rot.begin(), rot.end()),
                                 *std::max_element(anti.begin(), anti.end()));
    f.anchors.push_back(relation("neither interaction alone amplifies the signal",
                                 "all curves below 10^0", peak, peak <= 1.0,
                                 "computed = max R_B over both curves; MATCH if <= 1"));
  } else {
    f.anchors.push_back(relation(
        "at resonance the rotating-only noise suppression is stronger than anti-rotating-only",
        "N_ad_rot(0) < N_ad_anti(0)", rot.front() / anti.front(), rot.front() < anti.front(),
        "computed = N_ad_rot(0) / N_ad_anti(0); MATCH if < 1"));
    std::size_t better = 0;
    for (std::size_t i = 0; i < rot.size(); ++i) better += rot[i] < anti[i] ? 1 : 0;
    const double frac = static_cast<double>(better) / static_cast<double>(rot.size());
    f.anchors.push_back(relation(
        "the rotating-only case also suppresses noise well away from resonance",
        "N_ad_rot < N_ad_anti off resonance", frac, frac == 1.0,
        "computed = fraction of plotted frequencies with N_ad_rot < N_ad_anti; MATCH if 1"));
  }
  return f;
}

inline FigureData fig3(bool noise) {
  const SystemParams p = nominal_system();
  FigureData f;
  f.id = noise ? "fig3b" : "fig3a";
  f.title = noise ? "Additional noise N_ad for lambda2 in {0, 0.3, 0.6, 0.95} lambda1"
                  : "Response R_B for lambda2 in {0, 0.3, 0.6, 0.95} lambda1";
  f.x_label = "omega_over_kappa_m";
  f.x = omega_grid_over_kappa_m(1e-2, 1e1, 301, GridSpacing::log);
  // lambda2 = lambda1 is discussed alongside the family and included for comparison.
  f.curves = ratio_family(p, true);
  fill_spectrum(f, noise ? Quantity::n_ad : Quantity::r_b);

  const Quantity q = noise ? Quantity::n_ad : Quantity::r_b;
  std::vector<double> at_zero;
  for (const auto& c : f.curves) at_zero.push_back(evaluate(c, 0.0, q));

  if (!noise) {
    bool increasing = true;
    for (std::size_t i = 1; i < std::size(kFig3Ratios); ++i) increasing &= at_zero[i] > at_zero[i - 1];
    f.anchors.push_back(relation(
        "response at resonance grows with lambda2/lambda1", "R_B(0) increasing over 0, 0.3, 0.6, 0.95",
        at_zero[3], increasing, "computed = R_B(0) at 0.95; MATCH if R_B(0) strictly increases with the ratio"));
    f.anchors.push_back(relation("combined interactions amplify the signal", "R_B(0) > 1 at 0.95",
                                 at_zero[3], at_zero[3] > 1.0, "computed = R_B(0) at 0.95"));
    return f;
  }

  const std::size_t i95 = 3, i100 = 4;
  const auto best = std::min_element(at_zero.begin(), at_zero.end()) - at_zero.begin();
  f.anchors.push_back(relation(
      "best suppression at resonance is at lambda2 = 0.95 lambda1, not lambda2 = lambda1",
      "argmin N_ad(0) = 0.95", at_zero[i95] / at_zero[i100], best == static_cast<long>(i95),
      "computed = N_ad(0)|0.95 / N_ad(0)|1.0; MATCH if the 0.95 curve has the lowest N_ad(0)"));
  f.anchors.push_back(quoted_value("N_ad(0) of the lambda2 = 0.95 lambda1 curve", "0.0004", 4e-4,
                                   1e-4, at_zero[i95]));

  const Curve& c95 = curve(f, ratio_label(0.95));
  const Curve& c100 = curve(f, ratio_label(1.0));
  const auto minima = local_minima(c95, 0.05, 2.0);
  const double valley = minima.empty() ? std::numeric_limits<double>::quiet_NaN() : minima.front();
  const bool valley_near = !minima.empty() && std::abs(valley - 0.33) <= 0.1;
  std::ostringstream note;
  note << "computed = location of the first interior local minimum of N_ad (0.95 curve) in "
          "[0.05, 2] kappa_m, NaN if none; MATCH if within 0.1 of 0.33. N_ad(0) = "
       << at_zero[i95] << ", N_ad(0.33 kappa_m) = "
       << evaluate(c95, 0.33 * c95.params.kappa_m, Quantity::n_ad);
  if (minima.empty()) note << "; N_ad rises monotonically from resonance over this band";
  f.anchors.push_back(relation("valley region of the 0.95 curve near 0.33 kappa_m", "valley at omega ~ 0.33 kappa_m",
                               valley, valley_near, note.str()));

  const double w = 0.33 * c95.params.kappa_m;
  const double gain = evaluate(c100, w, Quantity::n_ad) / evaluate(c95, w, Quantity::n_ad);
  f.anchors.push_back(relation(
      "at 0.33 kappa_m the 0.95 curve suppresses noise an order of magnitude more than lambda2 = lambda1",
      "N_ad|1.0 / N_ad|0.95 >= 10 at 0.33 kappa_m", gain, gain >= 10.0,
      "computed = N_ad|1.0 / N_ad|0.95 at omega = 0.33 kappa_m"));

  for (double r : {0.3, 0.6}) {
    const auto m = local_minima(curve(f, ratio_label(r)), 0.01, 10.0);
    f.anchors.push_back(relation("the " + ratio_label(r) + " curve has a suppression valley",
                                 "interior minimum of N_ad", m.empty() ? std::nan("") : m.front(),
                                 !m.empty(),
                                 "computed = first interior local minimum in [0.01, 10] kappa_m, NaN if none"));
  }
  return f;
}

inline FigureData fig4a() {
  SystemParams p = nominal_system();
  p.temperature = 300.0;
  FigureData f;
  f.id = "fig4a";
  f.title = "Additional noise N_ad at T = 300 K";
  f.x_label = "omega_over_kappa_m";
  f.x = omega_grid_over_kappa_m(1e-2, 1e1, 301, GridSpacing::log);
  f.curves = ratio_family(p, true);
  fill_spectrum(f, Quantity::n_ad);
  const double n0 = evaluate(curve(f, ratio_label(0.95)), 0.0, Quantity::n_ad);
  f.anchors.push_back(relation("at 300 K the 0.95 curve stays below the SQL at resonance",
                               "N_ad(0) < 1/2", n0, n0 < kStandardQuantumLimit,
                               "computed = N_ad(0) of the 0.95 curve at 300 K"));
  return f;
}

inline FigureData fig4b() {
  FigureData f;
  f.id = "fig4b";
  f.title = "Additional noise N_ad(omega = 0) versus temperature";
  f.x_label = "temperature_K";
  f.x = omega_grid_over_kappa_m(1e-2, 1e4, 241, GridSpacing::log);  // log grid helper, reused for T
  const SystemParams base = nominal_system();
  Curve c = headline(base);
  check(c);
  f.columns = {c.label, "sql"};
  std::vector<double> col, sql;
  for (double t : f.x) {
    Curve ct = c;
    ct.params.temperature = t;
    col.push_back(evaluate(ct, 0.0, Quantity::n_ad));
    sql.push_back(kStandardQuantumLimit);
  }
  f.y = {col, sql};
  f.curves = {c};

  bool monotone = true;
  for (std::size_t i = 1; i < col.size(); ++i) monotone &= col[i] >= col[i - 1];
  double worst = 0.0;
  for (std::size_t i = 0; i < f.x.size(); ++i) {
    if (f.x[i] >= 0.05 && f.x[i] <= 300.0) worst = std::max(worst, col[i]);
  }
  Curve c300 = c;
  c300.params.temperature = 300.0;
  worst = std::max(worst, evaluate(c300, 0.0, Quantity::n_ad));
  f.anchors.push_back(relation("below the SQL over a wide temperature range",
                               "N_ad(0) < 1/2 for T in [0.05, 300] K", worst, worst < kStandardQuantumLimit,
                               "computed = max N_ad(0) over T in [0.05, 300] K"));
  f.anchors.push_back(relation("N_ad(0) grows with temperature", "monotone increasing",
                               col.back() / col.front(), monotone,
                               "computed = N_ad(0) at 1e4 K over N_ad(0) at 1e-2 K; MATCH if non-decreasing on the grid (flat at millikelvin temperatures where n_a is below double resolution next to 1/2)"));

  // Temperature where the curve crosses the SQL, by bisection in log T.
  double lo = 300.0, hi = 1e7;
  auto nad = [&](double t) {
    Curve ct = c;
    ct.params.temperature = t;
    return evaluate(ct, 0.0, Quantity::n_ad);
  };
  if (nad(hi) > kStandardQuantumLimit) {
    for (int i = 0; i < 200; ++i) {
      const double mid = std::sqrt(lo * hi);
      (nad(mid) < kStandardQuantumLimit ? lo : hi) = mid;
    }
    f.anchors.push_back(relation("(informational) SQL crossing temperature", "not quoted", lo, true,
                                 "computed = temperature in K where N_ad(0) reaches 1/2"));
  }
  return f;
}

inline FigureData fig7a() {
  const SystemParams p = nominal_system();
  FigureData f;
  f.id = "fig7a";
  f.title = "Additional noise N_ad with and without dual-frequency modulation";
  f.x_label = "omega_over_kappa_m";
  f.x = omega_grid_over_kappa_m(1e-2, 1e1, 301, GridSpacing::log);
  // Without modulation the bare beam-splitter coupling g acts alone.
  f.curves = {headline(p), fixed_curve("without_modulation", p, {0.0, p.g})};
  fill_spectrum(f, Quantity::n_ad);
  const double with = evaluate(f.curves[0], 0.0, Quantity::n_ad);
  const double without = evaluate(f.curves[1], 0.0, Quantity::n_ad);
  const double orders = std::log10(without / with);
  f.anchors.push_back(relation(
      "modulation improves resonant noise suppression by nearly five orders of magnitude",
      "log10(N_ad_without(0) / N_ad_with(0)) ~ 5", orders, std::abs(orders - 5.0) <= 1.0,
      "computed = log10 of the ratio at omega = 0; MATCH if within 1 of 5"));
  return f;
}

inline FigureData fig7b() {
  const SystemParams p = nominal_system();
  FigureData f;
  f.id = "fig7b";
  f.title = "Additional noise: reference ultra-strong scheme (C = 10, 100, 1000) vs this scheme";
  f.x_label = "omega_over_kappa_m";
  f.x = omega_grid_over_kappa_m(1e-2, 1e1, 301, GridSpacing::log);
  const double n_a = occupancies(p).n_a;
  std::vector<double> ref0;
  for (double coop : kReferenceCooperativities) {
    std::ostringstream os;
    os << "reference_C_" << coop;
    f.columns.push_back(os.str());
    std::vector<double> col;
    for (double x : f.x) {
      col.push_back(ultrastrong_reference(x * p.kappa_m, {coop, p.kappa_a, p.kappa_m, n_a}).n_ad2);
    }
    f.y.push_back(std::move(col));
    ref0.push_back(ultrastrong_reference(0.0, {coop, p.kappa_a, p.kappa_m, n_a}).n_ad2);
  }
  Curve c = headline(p);
  check(c);
  f.curves = {c};
  f.columns.push_back(c.label);
  std::vector<double> col;
  for (double x : f.x) col.push_back(evaluate(c, x * p.kappa_m, Quantity::n_ad));
  f.y.push_back(std::move(col));

  const double ours = evaluate(c, 0.0, Quantity::n_ad);
  f.anchors.push_back(quoted_value("this scheme's N_ad(0)", "0.0004", 4e-4, 1e-4, ours));
  f.anchors.push_back(quoted_value("reference curve attributed to the green dashed line (C = 100)",
                                   "0.0002", 2e-4, 1e-4, ref0[1]));
  f.anchors.push_back(relation("same order of magnitude as the reference scheme at C = 1000",
                               "N_ad(0) / N_ad2(0, C=1000) within a factor of 10", ours / ref0[2],
                               ours / ref0[2] < 10.0 && ours / ref0[2] > 0.1,
                               "computed = ratio of this scheme to the C = 1000 reference at omega = 0"));
  f.anchors.push_back(relation("significantly stronger suppression than C = 10 and C = 100",
                               "N_ad(0) < N_ad2(0) for C = 10, 100", ours / ref0[1],
                               ours < ref0[0] && ours < ref0[1],
                               "computed = ratio of this scheme to the C = 100 reference at omega = 0"));
  return f;
}

}  // namespace detail

inline FigureData reproduce(const std::string& id) {
  if (id == "fig2a") return detail::fig2(false);
  if (id == "fig2b") return detail::fig2(true);
  if (id == "fig3a") return detail::fig3(false);
  if (id == "fig3b") return detail::fig3(true);
  if (id == "fig4a") return detail::fig4a();
  if (id == "fig4b") return detail::fig4b();
  if (id == "fig7a") return detail::fig7a();
  if (id == "fig7b") return detail::fig7b();
  throw PreconditionError("unknown figure id '" + id + "'");
}

inline std::string report_text(const FigureData& f) {
  std::ostringstream os;
  os.precision(6);
  os << "Reproduction report: " << f.id << "\n" << f.title << "\n\n";
  int matches = 0;
  for (const auto& a : f.anchors) {
    os << (a.match ? "MATCH       " : "DISCREPANCY ") << a.claim << "\n"
       << "    quoted:   " << a.quoted << "\n"
       << "    computed: " << a.computed << "\n"
       << "    method:   " << a.note << "\n";
    matches += a.match ? 1 : 0;
  }
  os << "\n" << matches << " of " << f.anchors.size() << " anchors MATCH\n";
  return os.str();
}

inline json anchors_json(const FigureData& f) {
  json out = json::array();
  for (const auto& a : f.anchors) {
    out.push_back({{"claim", a.claim},
                   {"quoted", a.quoted},
                   {"computed", std::isfinite(a.computed) ? json(a.computed) : json(nullptr)},
                   {"verdict", a.match ? "MATCH" : "DISCREPANCY"},
                   {"method", a.note}});
  }
  return out;
}

}  // namespace magsense::figures
