#pragma once

// Marches the coupled atom-field system through the medium in the retarded
// frame (z, tau = t - z/c). At fixed z the atoms obey an ODE in tau driven by
// the local fields; the fields advance in z driven by the atomic coherences.
// Fields are stepped with a two-stage predictor-corrector (Heun) in z, the
// atoms with classical RK4 in tau. RK4 midpoint fields come from a four-point
// cubic stencil so the tau direction keeps its fourth-order convergence.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "adiabaton/dynamics.hpp"

namespace adiabaton {

struct GridSpec {
  double tau_min = 0.0;    // 1/Gamma
  double tau_max = 120.0;  // 1/Gamma
  double d_tau = 0.01;     // 1/Gamma
  double z_max = 70.0;     // L_abs
  double d_z = 0.01;       // L_abs
  int snapshot_stride_z = 100;  // store a slice every this many z steps
  int tau_output_stride = 1;    // subsample stored slices in tau
};

inline void validate(const GridSpec& g) {
  if (!(g.d_tau > 0.0) || !(g.d_z > 0.0))
    throw NonPositiveParameter("grid steps must be positive");
  if (!(g.tau_max > g.tau_min)) throw NonPositiveParameter("tau_max must exceed tau_min");
  if (!(g.z_max > 0.0)) throw NonPositiveParameter("z_max must be positive");
  if (g.snapshot_stride_z < 1 || g.tau_output_stride < 1)
    throw NonPositiveParameter("strides must be >= 1");
  const double ns = (g.tau_max - g.tau_min) / g.d_tau;
  const double nz = g.z_max / g.d_z;
  if (std::abs(ns - std::round(ns)) > 1e-6 || std::abs(nz - std::round(nz)) > 1e-6)
    throw NonPositiveParameter("grid extents must be integer multiples of the steps");
}

/// Complex field envelopes on the tau grid at one position.
struct FieldSlice {
  double z = 0.0;
  std::vector<double> tau;
  std::vector<std::vector<Complex>> omega;  // [field][tau index]
};

/// The z = 0 field history is just the entrance slice.
using FieldHistory = FieldSlice;

/// Atomic amplitudes on the tau grid at one position (same grid as the
/// enclosing solution's field slices).
struct AtomSlice {
  std::vector<std::vector<Complex>> psi;  // [level][tau index]
};

struct Snapshot {
  FieldSlice fields;
  AtomSlice atoms;
  double z() const { return fields.z; }
};

struct RunSummary {
  std::vector<std::string> warnings;
  double norm_violation_max = 0.0;  // largest increase of sum |psi|^2 along tau
  double max_excited_population = 0.0;
  double min_final_norm = 1.0;  // smallest sum |psi|^2 at tau_max over stored z
};

struct RunOptions {
  double coupling_scale = 1.0;  // rescales g; 0 = empty medium
  bool store_atoms = true;
};

/// Full space-time solution: snapshots ordered in z, first at z = 0 (the
/// boundary) and last at z_max regardless of stride.
struct SpaceTimeSolution {
  SchemeSpec scheme;
  GridSpec grid;
  std::vector<PulseSpec> boundary_pulses;
  std::vector<double> tau;  // output tau samples shared by all snapshots
  std::vector<Snapshot> snapshots;
  RunSummary summary;

  const Snapshot& boundary() const { return snapshots.front(); }

  /// Snapshot whose z is nearest to the request; throws if off by more than
  /// half the snapshot spacing.
  const Snapshot& at_z(double z) const {
    const Snapshot* best = nullptr;
    double best_d = 0.0;
    for (const Snapshot& s : snapshots) {
      const double d = std::abs(s.z() - z);
      if (!best || d < best_d) best = &s, best_d = d;
    }
    if (!best) throw GridMismatch("solution holds no snapshots");
    const double spacing = grid.d_z * grid.snapshot_stride_z;
    if (best_d > 0.5 * spacing + 1e-9)
      throw GridMismatch("no snapshot stored near z = " + std::to_string(z));
    return *best;
  }
};

inline double evaluate_boundary(const PulseSpec& pulse, double tau) { return evaluate(pulse, tau); }

namespace detail {

// Four-point interpolation of a grid function at the midpoint of cell i.
// Interior cells use the centred stencil (-1, 9, 9, -1)/16; the first and
// last cells fall back to the one-sided cubic through the nearest four nodes.
inline Complex midpoint(const std::vector<Complex>& f, std::size_t i) {
  const std::size_t n = f.size();
  if (n < 4) return 0.5 * (f[i] + f[i + 1]);
  if (i == 0) return 0.3125 * f[0] + 0.9375 * f[1] - 0.3125 * f[2] + 0.0625 * f[3];
  if (i == n - 2)
    return 0.0625 * f[n - 4] - 0.3125 * f[n - 3] + 0.9375 * f[n - 2] + 0.3125 * f[n - 1];
  return 0.0625 * (-f[i - 1] + 9.0 * f[i] + 9.0 * f[i + 1] - f[i + 2]);
}

struct SweepScratch {
  std::vector<std::vector<Complex>> psi;  // [level][tau index]
};

// Integrates the atomic ODE over the whole tau grid with the fields held at
// one z slice. Atoms start in ground level 0 at tau_min. Optionally tracks
// the worst norm increase between consecutive tau nodes.
inline void sweep_atoms(const SchemeSpec& s, const std::vector<std::vector<Complex>>& fields,
                        double d_tau, SweepScratch& out, double* norm_violation) {
  const int n_levels = s.n_levels();
  const int n_fields = s.n_fields();
  const std::size_t n_tau = fields[0].size();

  out.psi.assign(static_cast<std::size_t>(n_levels), std::vector<Complex>(n_tau));

  std::array<Complex, 5> psi{}, stage{}, k1{}, k2{}, k3{}, k4{};
  psi[0] = 1.0;
  std::array<Complex, 6> om{}, om_half{};

  for (int l = 0; l < n_levels; ++l) out.psi[static_cast<std::size_t>(l)][0] = psi[static_cast<std::size_t>(l)];

  double prev_norm = 1.0;
  double worst = 0.0;
  const double h = d_tau;

  for (std::size_t i = 0; i + 1 < n_tau; ++i) {
    for (int f = 0; f < n_fields; ++f) {
      om[static_cast<std::size_t>(f)] = fields[static_cast<std::size_t>(f)][i];
      om_half[static_cast<std::size_t>(f)] = midpoint(fields[static_cast<std::size_t>(f)], i);
    }
    atomic_rhs_core(s, om.data(), psi.data(), k1.data());
    for (int l = 0; l < n_levels; ++l)
      stage[static_cast<std::size_t>(l)] = psi[static_cast<std::size_t>(l)] + 0.5 * h * k1[static_cast<std::size_t>(l)];
    atomic_rhs_core(s, om_half.data(), stage.data(), k2.data());
    for (int l = 0; l < n_levels; ++l)
      stage[static_cast<std::size_t>(l)] = psi[static_cast<std::size_t>(l)] + 0.5 * h * k2[static_cast<std::size_t>(l)];
    atomic_rhs_core(s, om_half.data(), stage.data(), k3.data());
    for (int f = 0; f < n_fields; ++f) om[static_cast<std::size_t>(f)] = fields[static_cast<std::size_t>(f)][i + 1];
    for (int l = 0; l < n_levels; ++l)
      stage[static_cast<std::size_t>(l)] = psi[static_cast<std::size_t>(l)] + h * k3[static_cast<std::size_t>(l)];
    atomic_rhs_core(s, om.data(), stage.data(), k4.data());

    double norm = 0.0;
    for (int l = 0; l < n_levels; ++l) {
      psi[static_cast<std::size_t>(l)] +=
          (h / 6.0) * (k1[static_cast<std::size_t>(l)] + 2.0 * k2[static_cast<std::size_t>(l)] +
                       2.0 * k3[static_cast<std::size_t>(l)] + k4[static_cast<std::size_t>(l)]);
      out.psi[static_cast<std::size_t>(l)][i + 1] = psi[static_cast<std::size_t>(l)];
      norm += std::norm(psi[static_cast<std::size_t>(l)]);
    }
    if (norm_violation) {
      if (norm - prev_norm > worst) worst = norm - prev_norm;
      prev_norm = norm;
    }
  }
  if (norm_violation && worst > *norm_violation) *norm_violation = worst;
}

inline void field_sources(const SchemeSpec& s, const std::vector<std::vector<Complex>>& fields,
                          const SweepScratch& atoms, double scale,
                          std::vector<std::vector<Complex>>& src) {
  const std::size_t n_tau = fields[0].size();
  for (int f = 0; f < s.n_fields(); ++f) {
    const Coupling& c = s.couplings[static_cast<std::size_t>(f)];
    const std::vector<Complex>& pe = atoms.psi[static_cast<std::size_t>(s.n_ground + c.excited)];
    const std::vector<Complex>& pg = atoms.psi[static_cast<std::size_t>(c.ground)];
    std::vector<Complex>& out = src[static_cast<std::size_t>(f)];
    const Complex pref(0.0, 0.5 * scale);
    for (std::size_t i = 0; i < n_tau; ++i) out[i] = pref * pe[i] * std::conj(pg[i]);
  }
}

}  // namespace detail

/// Propagates the boundary fields through the medium. Boundary pulses are
/// indexed like the scheme's fields. Atoms are initialized in ground level 0
/// at tau_min for every z.
inline SpaceTimeSolution run(const SchemeSpec& scheme, const std::vector<PulseSpec>& boundary,
                             const GridSpec& grid, const RunOptions& options = {}) {
  validate(scheme);
  validate(grid);
  if (static_cast<int>(boundary.size()) != scheme.n_fields())
    throw SchemeMismatch("one boundary pulse per field required");
  for (const PulseSpec& p : boundary) validate(p);

  const std::size_t n_tau = static_cast<std::size_t>(
      std::llround((grid.tau_max - grid.tau_min) / grid.d_tau)) + 1;
  const std::size_t n_z = static_cast<std::size_t>(std::llround(grid.z_max / grid.d_z));
  const int nf = scheme.n_fields();

  SpaceTimeSolution sol;
  sol.scheme = scheme;
  sol.grid = grid;
  sol.boundary_pulses = boundary;

  std::vector<double> tau(n_tau);
  for (std::size_t i = 0; i < n_tau; ++i) tau[i] = grid.tau_min + static_cast<double>(i) * grid.d_tau;

  const std::size_t stride = static_cast<std::size_t>(grid.tau_output_stride);
  for (std::size_t i = 0; i < n_tau; i += stride) sol.tau.push_back(tau[i]);

  // Sample the boundary history.
  std::vector<std::vector<Complex>> F(static_cast<std::size_t>(nf), std::vector<Complex>(n_tau));
  for (int f = 0; f < nf; ++f)
    for (std::size_t i = 0; i < n_tau; ++i)
      F[static_cast<std::size_t>(f)][i] = evaluate(boundary[static_cast<std::size_t>(f)], tau[i]);

  // Boundary sanity warnings (warning-level GridTooCoarse conditions).
  {
    double peak = 0.0;
    for (const auto& row : F)
      for (const Complex& v : row) peak = std::max(peak, std::abs(v));
    if (peak * grid.d_tau > 0.8)
      sol.summary.warnings.push_back(
          "grid_too_coarse: d_tau does not resolve the largest Rabi frequency");
    bool any_control = false;
    for (int f = 0; f < nf; ++f) {
      const Coupling& c = scheme.couplings[static_cast<std::size_t>(f)];
      const bool is_probe = (c.ground == 0);
      if (!is_probe)
        for (const Complex& v : F[static_cast<std::size_t>(f)])
          if (std::abs(v) > 1e-12) { any_control = true; break; }
    }
    if (!any_control)
      sol.summary.warnings.push_back(
          "grid_too_coarse: all control fields vanish, transparency assumptions fail");
    for (const PulseSpec& p : boundary)
      if (const auto* g = std::get_if<GaussianPulse>(&p))
        if (g->center - 4.0 * g->width < grid.tau_min || g->center + 4.0 * g->width > grid.tau_max)
          sol.summary.warnings.push_back("pulse support clipped by the tau window");
  }

  detail::SweepScratch atoms, atoms_pred;
  std::vector<std::vector<Complex>> src(static_cast<std::size_t>(nf), std::vector<Complex>(n_tau));
  std::vector<std::vector<Complex>> src_pred = src;
  std::vector<std::vector<Complex>> F_pred = F;

  const auto check_finite = [&](std::size_t k) {
    for (int f = 0; f < nf; ++f)
      for (std::size_t i = 0; i < n_tau; ++i) {
        const Complex v = F[static_cast<std::size_t>(f)][i];
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
          throw NonFiniteDetected("non-finite field " + scheme.field_name(f) + " at z = " +
                                  std::to_string(static_cast<double>(k) * grid.d_z) +
                                  ", tau = " + std::to_string(tau[i]));
      }
  };

  const auto store_snapshot = [&](std::size_t k) {
    Snapshot snap;
    snap.fields.z = static_cast<double>(k) * grid.d_z;
    snap.fields.tau = sol.tau;
    snap.fields.omega.resize(static_cast<std::size_t>(nf));
    for (int f = 0; f < nf; ++f) {
      auto& out = snap.fields.omega[static_cast<std::size_t>(f)];
      out.reserve(sol.tau.size());
      for (std::size_t i = 0; i < n_tau; i += stride) out.push_back(F[static_cast<std::size_t>(f)][i]);
    }
    if (options.store_atoms) {
      snap.atoms.psi.resize(static_cast<std::size_t>(scheme.n_levels()));
      for (int l = 0; l < scheme.n_levels(); ++l) {
        auto& out = snap.atoms.psi[static_cast<std::size_t>(l)];
        out.reserve(sol.tau.size());
        for (std::size_t i = 0; i < n_tau; i += stride)
          out.push_back(atoms.psi[static_cast<std::size_t>(l)][i]);
      }
    }
    double final_norm = 0.0, max_exc = 0.0;
    for (int l = 0; l < scheme.n_levels(); ++l)
      final_norm += std::norm(atoms.psi[static_cast<std::size_t>(l)].back());
    for (int j = 0; j < scheme.n_excited; ++j)
      for (const Complex& v : atoms.psi[static_cast<std::size_t>(scheme.n_ground + j)])
        max_exc = std::max(max_exc, std::norm(v));
    sol.summary.min_final_norm = std::min(sol.summary.min_final_norm, final_norm);
    sol.summary.max_excited_population = std::max(sol.summary.max_excited_population, max_exc);
    sol.snapshots.push_back(std::move(snap));
  };

  const std::size_t snap_stride = static_cast<std::size_t>(grid.snapshot_stride_z);
  const double dz = grid.d_z;

  for (std::size_t k = 0;; ++k) {
    const bool is_snapshot = (k % snap_stride == 0) || k == n_z;
    detail::sweep_atoms(scheme, F, grid.d_tau, atoms,
                        is_snapshot ? &sol.summary.norm_violation_max : nullptr);
    if (is_snapshot) store_snapshot(k);
    if (k == n_z) break;

    detail::field_sources(scheme, F, atoms, options.coupling_scale, src);
    for (int f = 0; f < nf; ++f)
      for (std::size_t i = 0; i < n_tau; ++i)
        F_pred[static_cast<std::size_t>(f)][i] =
            F[static_cast<std::size_t>(f)][i] + dz * src[static_cast<std::size_t>(f)][i];
    detail::sweep_atoms(scheme, F_pred, grid.d_tau, atoms_pred, nullptr);
    detail::field_sources(scheme, F_pred, atoms_pred, options.coupling_scale, src_pred);
    for (int f = 0; f < nf; ++f)
      for (std::size_t i = 0; i < n_tau; ++i)
        F[static_cast<std::size_t>(f)][i] +=
            0.5 * dz * (src[static_cast<std::size_t>(f)][i] + src_pred[static_cast<std::size_t>(f)][i]);
    check_finite(k + 1);
  }

  // Delayed structure still present at the late edge of the window means the
  // tau grid clipped the content it was supposed to capture.
  {
    double scale = 0.0;
    for (const auto& row : F)
      for (const Complex& v : row) scale = std::max(scale, std::abs(v));
    const std::size_t tail = std::max<std::size_t>(2, n_tau / 100);
    double dev = 0.0;
    for (int f = 0; f < nf; ++f)
      for (std::size_t i = n_tau - tail; i < n_tau; ++i)
        dev = std::max(dev, std::abs(F[static_cast<std::size_t>(f)][i] -
                                     Complex(evaluate(boundary[static_cast<std::size_t>(f)], tau[i]), 0.0)));
    if (scale > 0.0 && dev > 1e-3 * scale)
      sol.summary.warnings.push_back("field structure reaches the late edge of the tau window");
  }

  return sol;
}

}  // namespace adiabaton
