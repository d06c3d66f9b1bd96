#pragma once

// Quantitative post-processing of solver output: conservation drifts along
// the vertical characteristics of the retarded frame, shape-preservation and
// steepening metrics, eigenmode projections, and the assembled report that
// classifies a run as adiabatonic or not.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "adiabaton/adiabatic.hpp"

namespace adiabaton {

/// A linear combination of fields, e.g. a single envelope or the difference
/// of the two double-tripod probes.
struct FieldCombination {
  std::vector<std::pair<int, Complex>> terms;  // (field_id, coefficient)
  std::string label;

  static FieldCombination single(const SchemeSpec& s, int field_id) {
    return {{{field_id, 1.0}}, s.field_name(field_id)};
  }
};

namespace detail {

inline std::vector<Complex> combine(const FieldSlice& slice, const FieldCombination& combo) {
  std::vector<Complex> out(slice.tau.size(), Complex{});
  for (const auto& [f, coeff] : combo.terms)
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] += coeff * slice.omega[static_cast<std::size_t>(f)][i];
  return out;
}

inline Complex interp_complex(const std::vector<double>& x, const std::vector<Complex>& y,
                              double v) {
  if (v <= x.front()) return y.front();
  if (v >= x.back()) return y.back();
  const auto it = std::upper_bound(x.begin(), x.end(), v);
  const std::size_t k = static_cast<std::size_t>(it - x.begin()) - 1;
  const double w = (v - x[k]) / (x[k + 1] - x[k]);
  return y[k] + w * (y[k + 1] - y[k]);
}

/// Quadratically refined position and height of the maximum of |y|.
inline std::pair<double, double> peak_position(const std::vector<double>& x,
                                               const std::vector<double>& y) {
  std::size_t k = 0;
  for (std::size_t i = 1; i < y.size(); ++i)
    if (y[i] > y[k]) k = i;
  if (k == 0 || k + 1 >= y.size()) return {x[k], y[k]};
  const double ym = y[k - 1], y0 = y[k], yp = y[k + 1];
  const double denom = ym - 2.0 * y0 + yp;
  if (std::abs(denom) < 1e-300) return {x[k], y0};
  const double shift = 0.5 * (ym - yp) / denom;
  const double h = x[k + 1] - x[k];
  return {x[k] + shift * h, y0 - 0.25 * (ym - yp) * shift};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Conservation of the quantities transported at the speed of light

struct ConservationReport {
  struct Entry {
    std::string name;
    double drift;  // max over (z, tau) of |Q(z,tau) - Q(0,tau)| / max_tau |Q(0,tau)|
  };
  std::vector<Entry> entries;

  double max_drift() const {
    double m = 0.0;
    for (const Entry& e : entries) m = std::max(m, e.drift);
    return m;
  }
};

/// Scheme-dependent conserved quantities: the total Rabi frequency for
/// Lambda, the per-tripod totals for M, and additionally the cross overlap
/// and the dark-state normalization for the double tripod.
inline ConservationReport check_conservation(const SpaceTimeSolution& sol) {
  if (sol.snapshots.size() < 2) throw GridMismatch("need at least two stored slices");
  const std::size_t n = sol.tau.size();

  struct Quantity {
    std::string name;
    std::vector<Complex> (*eval)(const FieldSlice&);
  };
  std::vector<Quantity> quantities;

  switch (sol.scheme.kind) {
    case SchemeKind::Lambda:
      quantities.push_back({"omega_total", [](const FieldSlice& s) {
                              std::vector<Complex> q(s.tau.size());
                              for (std::size_t i = 0; i < q.size(); ++i)
                                q[i] = std::sqrt(std::norm(s.omega[0][i]) + std::norm(s.omega[1][i]));
                              return q;
                            }});
      break;
    case SchemeKind::MType:
      quantities.push_back({"omega_1", [](const FieldSlice& s) {
                              std::vector<Complex> q(s.tau.size());
                              for (std::size_t i = 0; i < q.size(); ++i)
                                q[i] = std::sqrt(std::norm(s.omega[0][i]) + std::norm(s.omega[1][i]));
                              return q;
                            }});
      quantities.push_back({"omega_2", [](const FieldSlice& s) {
                              std::vector<Complex> q(s.tau.size());
                              for (std::size_t i = 0; i < q.size(); ++i)
                                q[i] = std::sqrt(std::norm(s.omega[2][i]) + std::norm(s.omega[3][i]));
                              return q;
                            }});
      break;
    case SchemeKind::DoubleTripod:
      quantities.push_back({"omega_1", [](const FieldSlice& s) {
                              std::vector<Complex> q(s.tau.size());
                              for (std::size_t i = 0; i < q.size(); ++i)
                                q[i] = std::sqrt(std::norm(s.omega[0][i]) + std::norm(s.omega[1][i]) +
                                                 std::norm(s.omega[2][i]));
                              return q;
                            }});
      quantities.push_back({"omega_2", [](const FieldSlice& s) {
                              std::vector<Complex> q(s.tau.size());
                              for (std::size_t i = 0; i < q.size(); ++i)
                                q[i] = std::sqrt(std::norm(s.omega[3][i]) + std::norm(s.omega[4][i]) +
                                                 std::norm(s.omega[5][i]));
                              return q;
                            }});
      quantities.push_back({"cross_overlap", [](const FieldSlice& s) {
                              std::vector<Complex> q(s.tau.size());
                              for (std::size_t i = 0; i < q.size(); ++i)
                                q[i] = std::conj(s.omega[3][i]) * s.omega[0][i] +
                                       std::conj(s.omega[4][i]) * s.omega[1][i] +
                                       std::conj(s.omega[5][i]) * s.omega[2][i];
                              return q;
                            }});
      quantities.push_back({"n0", [](const FieldSlice& s) {
                              std::vector<Complex> q(s.tau.size());
                              for (std::size_t i = 0; i < q.size(); ++i) {
                                const Complex c0 = s.omega[1][i] * s.omega[5][i] - s.omega[2][i] * s.omega[4][i];
                                const Complex c1 = s.omega[2][i] * s.omega[3][i] - s.omega[0][i] * s.omega[5][i];
                                const Complex c2 = s.omega[0][i] * s.omega[4][i] - s.omega[1][i] * s.omega[3][i];
                                q[i] = std::sqrt(std::norm(c0) + std::norm(c1) + std::norm(c2));
                              }
                              return q;
                            }});
      break;
  }

  ConservationReport rep;
  for (const Quantity& q : quantities) {
    const std::vector<Complex> ref = q.eval(sol.boundary().fields);
    double scale = 0.0;
    for (const Complex& v : ref) scale = std::max(scale, std::abs(v));
    if (scale <= 0.0) scale = 1.0;
    double worst = 0.0;
    for (const Snapshot& snap : sol.snapshots) {
      const std::vector<Complex> cur = q.eval(snap.fields);
      for (std::size_t i = 0; i < n; ++i)
        worst = std::max(worst, std::abs(cur[i] - ref[i]));
    }
    rep.entries.push_back({q.name, worst / scale});
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Shape preservation

/// Relative L2 distance between the combination at z_probe and its z_ref
/// profile advected at the supplied group velocity. The velocity comes from
/// the adiabatic oracles, not from a fit, so the metric stays falsifiable.
inline double shape_preservation(const SpaceTimeSolution& sol, const FieldCombination& combo,
                                 double v_g, double z_ref, double z_probe) {
  if (!(z_ref < z_probe) && z_ref != z_probe)
    throw GridMismatch("z_ref must not exceed z_probe");
  if (!(v_g > 0.0)) throw NonPositiveParameter("group velocity must be positive");

  const FieldSlice& ref = sol.at_z(z_ref).fields;
  const FieldSlice& probe = sol.at_z(z_probe).fields;
  const std::vector<Complex> p_ref = detail::combine(ref, combo);
  const std::vector<Complex> p_probe = detail::combine(probe, combo);
  const double shift = (z_probe - z_ref) / v_g;

  // The reference support, shifted, must stay inside the tau window.
  double peak = 0.0;
  for (const Complex& v : p_ref) peak = std::max(peak, std::abs(v));
  if (peak > 0.0 && shift > 0.0) {
    double support_max = sol.tau.front();
    for (std::size_t i = 0; i < p_ref.size(); ++i)
      if (std::abs(p_ref[i]) >= 0.01 * peak) support_max = sol.tau[i];
    if (support_max + shift > sol.tau.back() + 1e-9)
      throw WindowClipped("shifted reference support leaves the tau grid");
  }

  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < sol.tau.size(); ++i) {
    const Complex shifted = detail::interp_complex(sol.tau, p_ref, sol.tau[i] - shift);
    num += std::norm(p_probe[i] - shifted);
    den += std::norm(p_ref[i]);
  }
  if (den <= 0.0) return 0.0;
  return std::sqrt(num / den);
}

// ---------------------------------------------------------------------------
// Self-steepening

struct SteepeningPoint {
  double z;
  double max_gradient;  // max_tau |d(chi_1)/d tau|
};

/// Centered-difference gradient of the first probe/control ratio on the
/// stored tau grid, maximum per snapshot. No smoothing: the steepening is the
/// signal of interest.
inline std::vector<SteepeningPoint> steepening_metric(const SpaceTimeSolution& sol) {
  int probe = 0, control = 1;  // omega_1_0 / omega_1_1 in every scheme's ordering
  std::vector<SteepeningPoint> curve;
  const std::vector<double>& tau = sol.tau;
  for (const Snapshot& snap : sol.snapshots) {
    std::vector<Complex> chi(tau.size());
    for (std::size_t i = 0; i < tau.size(); ++i) {
      const Complex c = snap.fields.omega[static_cast<std::size_t>(control)][i];
      if (std::abs(c) <= kFieldEpsilon)
        throw ControlVanishes("control field vanishes where the ratio is evaluated");
      chi[i] = snap.fields.omega[static_cast<std::size_t>(probe)][i] / c;
    }
    double worst = 0.0;
    for (std::size_t i = 1; i + 1 < tau.size(); ++i) {
      const double g = std::abs(chi[i + 1] - chi[i - 1]) / (tau[i + 1] - tau[i - 1]);
      worst = std::max(worst, g);
    }
    curve.push_back({snap.z(), worst});
  }
  return curve;
}

inline double steepening_growth(const std::vector<SteepeningPoint>& curve, double z_a, double z_b) {
  const auto at = [&](double z) {
    const SteepeningPoint* best = nullptr;
    for (const SteepeningPoint& p : curve)
      if (!best || std::abs(p.z - z) < std::abs(best->z - z)) best = &p;
    if (!best) throw GridMismatch("empty steepening curve");
    return best->max_gradient;
  };
  const double a = at(z_a);
  if (a <= 0.0) return std::numeric_limits<double>::infinity();
  return at(z_b) / a;
}

// ---------------------------------------------------------------------------
// Auxiliary peak-velocity fit

/// Least-squares fit of the combination's peak position against z, for
/// cross-checking a caller-supplied group velocity. An immobile peak (empty
/// medium) comes back with zero inverse velocity and infinite v_g.
struct PeakVelocityFit {
  double inverse_velocity = 0.0;  // retarded delay per L_abs
  double v_g = 0.0;
  int points = 0;
};

inline PeakVelocityFit fit_peak_velocity(const SpaceTimeSolution& sol,
                                         const FieldCombination& combo, double z_min,
                                         double z_max) {
  std::vector<double> zs, taus;
  for (const Snapshot& snap : sol.snapshots) {
    if (snap.z() < z_min - 1e-9 || snap.z() > z_max + 1e-9) continue;
    const std::vector<Complex> p = detail::combine(snap.fields, combo);
    std::vector<double> mag(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) mag[i] = std::abs(p[i]);
    zs.push_back(snap.z());
    taus.push_back(detail::peak_position(sol.tau, mag).first);
  }
  if (zs.size() < 2) throw GridMismatch("peak fit needs at least two snapshots in range");
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < zs.size(); ++i) {
    sx += zs[i];
    sy += taus[i];
    sxx += zs[i] * zs[i];
    sxy += zs[i] * taus[i];
  }
  const double n = static_cast<double>(zs.size());
  PeakVelocityFit fit;
  fit.points = static_cast<int>(zs.size());
  fit.inverse_velocity = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  fit.v_g = std::abs(fit.inverse_velocity) < 1e-300
                ? std::numeric_limits<double>::infinity()
                : 1.0 / fit.inverse_velocity;
  return fit;
}

// ---------------------------------------------------------------------------
// Double-tripod mode projection

struct ModeProjectionPoint {
  double z;
  double slow_amplitude, slow_tau;  // peak of the slow-mode projection
  double fast_amplitude, fast_tau;
};

/// Projects the probe pair onto the normalized eigenvectors of the background
/// inverse-velocity matrix; peak amplitude and position per mode per z. The
/// background is read from the z = 0 slice at early tau where the probes
/// vanish.
inline std::vector<ModeProjectionPoint> mode_projection(const SpaceTimeSolution& sol) {
  if (sol.scheme.kind != SchemeKind::DoubleTripod)
    throw SchemeMismatch("mode projection applies to the double tripod");

  FieldPoint bg = FieldPoint::zero(sol.scheme);
  for (int f = 0; f < 6; ++f) bg[f] = sol.boundary().fields.omega[static_cast<std::size_t>(f)][0];
  bg[0] = bg[3] = 0.0;  // probes vanish at early tau
  const auto modes = dt_normal_modes(dt_velocity_matrix(bg));

  std::vector<ModeProjectionPoint> out;
  const std::vector<double>& tau = sol.tau;
  std::vector<double> amp_s(tau.size()), amp_f(tau.size());
  for (const Snapshot& snap : sol.snapshots) {
    for (std::size_t i = 0; i < tau.size(); ++i) {
      const Complex p1 = snap.fields.omega[0][i];
      const Complex p2 = snap.fields.omega[3][i];
      const auto proj = [&](const NormalMode& m) {
        return std::abs(std::conj(m.eigvec[0]) * p1 + std::conj(m.eigvec[1]) * p2);
      };
      amp_s[i] = proj(modes.first);
      amp_f[i] = proj(modes.second);
    }
    const auto [ts, as] = detail::peak_position(tau, amp_s);
    const auto [tf, af] = detail::peak_position(tau, amp_f);
    out.push_back({snap.z(), as, ts, af, tf});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Assembled report

struct DiagnosticsReport {
  double norm_violation_max = 0.0;
  ConservationReport conservation;
  std::optional<double> shape_error;
  std::optional<PeakVelocityFit> peak_fit;  // cross-check for the supplied v_g
  std::optional<std::vector<SteepeningPoint>> steepening_curve;
  std::optional<std::vector<ModeProjectionPoint>> mode_projections;
  std::optional<double> adiabaticity_max;  // worst monitor value over the run
  double adiabaticity_threshold = 0.1;
  std::vector<std::string> flags;
};

struct DiagnosticsOptions {
  double adiabaticity_threshold = 0.1;
  bool steepening = true;
  bool modes = true;  // double tripod only
  struct Shape {
    FieldCombination combination;
    double v_g;
    double z_ref;
    double z_probe;
  };
  std::optional<Shape> shape;
};

/// Worst adiabaticity monitor over the boundary history, evaluated with the
/// analytic pulse derivatives.
inline double boundary_adiabaticity_max(const SpaceTimeSolution& sol) {
  const SchemeSpec& s = sol.scheme;
  double worst = 0.0;
  FieldPoint f = FieldPoint::zero(s), d = FieldPoint::zero(s);
  for (double tau : sol.tau) {
    for (int k = 0; k < s.n_fields(); ++k) {
      f[k] = evaluate(sol.boundary_pulses[static_cast<std::size_t>(k)], tau);
      d[k] = evaluate_derivative(sol.boundary_pulses[static_cast<std::size_t>(k)], tau);
    }
    switch (s.kind) {
      case SchemeKind::Lambda: {
        const LambdaFrame fr = lambda_frame(f, d, s.detunings[1], s.gamma);
        const LambdaMonitor m = lambda_adiabaticity(fr, s.gamma, s.alpha);
        worst = std::max({worst, m.omega_minus_over_total, m.delta_ratio, m.omega_minus_ratio});
        break;
      }
      case SchemeKind::MType: {
        const MFrame fr = m_frame(f, d, s.detunings[1], s.detunings[2]);
        worst = std::max({worst, std::abs(fr.w1), std::abs(fr.w2)});
        break;
      }
      case SchemeKind::DoubleTripod: {
        const DTFrame fr = dt_frame(f, d, s.detunings[1], s.detunings[2]);
        worst = std::max({worst, std::abs(fr.w1), std::abs(fr.w2)});
        break;
      }
    }
  }
  return worst;
}

/// Worst adiabaticity monitor over every stored slice, with field time
/// derivatives from centered differences on the stored tau grid. Points where
/// a frame is undefined (vanishing fields, parallel tripods) are skipped.
inline double run_adiabaticity_max(const SpaceTimeSolution& sol) {
  const SchemeSpec& s = sol.scheme;
  double worst = 0.0;
  FieldPoint f = FieldPoint::zero(s), d = FieldPoint::zero(s);
  for (const Snapshot& snap : sol.snapshots) {
    for (std::size_t i = 1; i + 1 < sol.tau.size(); ++i) {
      const double dt2 = sol.tau[i + 1] - sol.tau[i - 1];
      for (int k = 0; k < s.n_fields(); ++k) {
        const auto& row = snap.fields.omega[static_cast<std::size_t>(k)];
        f[k] = row[i];
        d[k] = (row[i + 1] - row[i - 1]) / dt2;
      }
      try {
        switch (s.kind) {
          case SchemeKind::Lambda: {
            const LambdaFrame fr = lambda_frame(f, d, s.detunings[1], s.gamma);
            const LambdaMonitor m = lambda_adiabaticity(fr, s.gamma, s.alpha);
            worst = std::max({worst, m.omega_minus_over_total, m.delta_ratio, m.omega_minus_ratio});
            break;
          }
          case SchemeKind::MType: {
            const MFrame fr = m_frame(f, d, s.detunings[1], s.detunings[2]);
            worst = std::max({worst, std::abs(fr.w1), std::abs(fr.w2)});
            break;
          }
          case SchemeKind::DoubleTripod: {
            const DTFrame fr = dt_frame(f, d, s.detunings[1], s.detunings[2]);
            worst = std::max({worst, std::abs(fr.w1), std::abs(fr.w2)});
            break;
          }
        }
      } catch (const Error&) {
      }
    }
  }
  return worst;
}

inline DiagnosticsReport build_report(const SpaceTimeSolution& sol,
                                      const DiagnosticsOptions& opts = {}) {
  DiagnosticsReport rep;
  rep.norm_violation_max = sol.summary.norm_violation_max;
  rep.conservation = check_conservation(sol);
  rep.adiabaticity_threshold = opts.adiabaticity_threshold;
  rep.adiabaticity_max = run_adiabaticity_max(sol);
  if (*rep.adiabaticity_max > opts.adiabaticity_threshold)
    rep.flags.push_back("non_adiabatic");
  if (opts.shape) {
    rep.shape_error = shape_preservation(sol, opts.shape->combination, opts.shape->v_g,
                                         opts.shape->z_ref, opts.shape->z_probe);
    rep.peak_fit = fit_peak_velocity(sol, opts.shape->combination, opts.shape->z_ref,
                                     opts.shape->z_probe);
  }
  if (opts.steepening) rep.steepening_curve = steepening_metric(sol);
  if (opts.modes && sol.scheme.kind == SchemeKind::DoubleTripod)
    rep.mode_projections = mode_projection(sol);
  return rep;
}

}  // namespace adiabaton
