#pragma once

// Closed-form adiabatic-limit results: coupled/uncoupled basis
// transformations, non-adiabatic coupling rates and adiabaticity monitors for
// all three schemes, the Lambda stretched-time solution, the group-velocity
// laws, and the double-tripod eigenmode machinery. These are the oracles the
// integrator is validated against.
//
// Field time derivatives are supplied analytically by the caller; none of
// these routines difference numerically.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <utility>
#include <vector>

#include "adiabaton/integrator.hpp"

namespace adiabaton {

inline constexpr double kFieldEpsilon = 1e-12;  // guard in field units of Gamma

// ---------------------------------------------------------------------------
// Lambda scheme

/// Derived quantities of the coupled/uncoupled decomposition at one
/// space-time point of a Lambda system.
struct LambdaFrame {
  double omega_total = 0.0;   // Omega = sqrt(|Omega_0|^2 + |Omega_1|^2)
  Complex psi_coupled{};      // amplitude on the coupled ground combination
  Complex psi_uncoupled{};    // amplitude on the dark combination
  double delta_eff = 0.0;     // energy separation between the two, over 2
  Complex omega_minus{};      // non-adiabatic coupling rate
  Complex psi_coupled_est{};  // first-order estimate from psi_uncoupled
  Complex psi_excited_est{};  // first-order excited amplitude estimate
  double loss_rate = 0.0;     // 2 Gamma |Omega_-|^2 / Omega^2
};

/// fields = (Omega_0, Omega_1); derivs = their analytic time derivatives.
inline LambdaFrame lambda_frame(const FieldPoint& fields, const FieldPoint& derivs,
                                const AtomState& state, double delta, double gamma) {
  const Complex o0 = fields[0], o1 = fields[1];
  const Complex d0 = derivs[0], d1 = derivs[1];
  const double total = std::sqrt(std::norm(o0) + std::norm(o1));
  if (total <= kFieldEpsilon) throw ZeroTotalField("total Rabi frequency vanishes");

  const double dtotal =
      (std::real(std::conj(o0) * d0) + std::real(std::conj(o1) * d1)) / total;
  const Complex z0 = o0 / total, z1 = o1 / total;
  const Complex dz0 = d0 / total - o0 * dtotal / (total * total);
  const Complex dz1 = d1 / total - o1 * dtotal / (total * total);

  LambdaFrame fr;
  fr.omega_total = total;
  fr.psi_coupled = z0 * state.ground(0) + z1 * state.ground(1);
  fr.psi_uncoupled = std::conj(z1) * state.ground(0) - std::conj(z0) * state.ground(1);
  fr.delta_eff = std::real(Complex(0.0, 1.0) * (z0 * std::conj(dz0) + z1 * std::conj(dz1))) +
                 delta * std::norm(z0);
  fr.omega_minus = Complex(0.0, 1.0) * (z1 * dz0 - z0 * dz1) - delta * z0 * z1;
  fr.psi_coupled_est =
      Complex(0.0, -2.0) * (gamma / total) * (fr.omega_minus / total) * fr.psi_uncoupled;
  fr.psi_excited_est = 2.0 * (fr.omega_minus / total) * fr.psi_uncoupled;
  fr.loss_rate = 2.0 * gamma * std::norm(fr.omega_minus) / (total * total);
  return fr;
}

/// lambda_frame evaluated on the ideal dark state (|psi_U| = 1, psi_C = 0);
/// enough for the monitor ratios, which do not depend on the atomic state.
inline LambdaFrame lambda_frame(const FieldPoint& fields, const FieldPoint& derivs, double delta,
                                double gamma) {
  AtomState dark;
  dark.n_ground = 2;
  dark.n_excited = 1;
  const double total = std::sqrt(std::norm(fields[0]) + std::norm(fields[1]));
  if (total <= kFieldEpsilon) throw ZeroTotalField("total Rabi frequency vanishes");
  dark.ground(0) = fields[1] / total;
  dark.ground(1) = -fields[0] / total;
  return lambda_frame(fields, derivs, dark, delta, gamma);
}

/// Dimensionless adiabaticity ratios of a Lambda frame, each flagged against
/// the threshold. `lifetime` is the integrated-loss criterion
/// (Gamma |Omega_-| / Omega^2)^2 * alpha over the full medium depth.
struct LambdaMonitor {
  double omega_minus_over_total = 0.0;   // |Omega_-| / Omega
  double delta_ratio = 0.0;              // Gamma |Delta| / Omega^2
  double omega_minus_ratio = 0.0;        // Gamma |Omega_-| / Omega^2
  double lifetime = 0.0;
  double threshold = 0.1;
  bool pass_omega_minus_over_total = true;
  bool pass_delta_ratio = true;
  bool pass_omega_minus_ratio = true;
  bool pass_lifetime = true;
  bool all_pass() const {
    return pass_omega_minus_over_total && pass_delta_ratio && pass_omega_minus_ratio &&
           pass_lifetime;
  }
};

inline LambdaMonitor lambda_adiabaticity(const LambdaFrame& frame, double gamma, double alpha,
                                         double threshold = 0.1) {
  LambdaMonitor m;
  const double o = frame.omega_total, o2 = o * o;
  m.omega_minus_over_total = std::abs(frame.omega_minus) / o;
  m.delta_ratio = gamma * std::abs(frame.delta_eff) / o2;
  m.omega_minus_ratio = gamma * std::abs(frame.omega_minus) / o2;
  m.lifetime = m.omega_minus_ratio * m.omega_minus_ratio * alpha;
  m.threshold = threshold;
  m.pass_omega_minus_over_total = m.omega_minus_over_total <= threshold;
  m.pass_delta_ratio = m.delta_ratio <= threshold;
  m.pass_omega_minus_ratio = m.omega_minus_ratio <= threshold;
  m.pass_lifetime = m.lifetime <= threshold;
  return m;
}

/// Monotone map zeta(tau) = integral of Omega(0,tau')^2 dtau' (units L_abs in
/// the dimensionless convention) together with its inverse; linearizes the
/// Lambda field-ratio transport.
struct StretchedTime {
  std::vector<double> tau;   // sample points
  std::vector<double> zeta;  // zeta at those points, zeta(tau_front) = 0

  double forward(double t) const { return interp(tau, zeta, t); }
  double inverse(double z) const { return interp(zeta, tau, z); }

 private:
  static double interp(const std::vector<double>& x, const std::vector<double>& y, double v) {
    if (v <= x.front()) return y.front();
    if (v >= x.back()) return y.back();
    const auto it = std::upper_bound(x.begin(), x.end(), v);
    const std::size_t k = static_cast<std::size_t>(it - x.begin()) - 1;
    const double span = x[k + 1] - x[k];
    if (span <= 0.0) return y[k];
    return y[k] + (v - x[k]) / span * (y[k + 1] - y[k]);
  }
};

/// Builds the stretched-time table from the boundary pulses on tau_grid.
inline StretchedTime stretched_time(const PulseSpec& probe, const PulseSpec& control,
                                    const std::vector<double>& tau_grid) {
  StretchedTime st;
  st.tau = tau_grid;
  st.zeta.resize(tau_grid.size());
  double acc = 0.0;
  double prev = 0.0;
  for (std::size_t i = 0; i < tau_grid.size(); ++i) {
    const double a = evaluate(probe, tau_grid[i]);
    const double b = evaluate(control, tau_grid[i]);
    const double total2 = a * a + b * b;
    if (total2 <= kFieldEpsilon * kFieldEpsilon)
      throw ZeroTotalField("total Rabi frequency vanishes on the tau grid");
    if (i > 0) acc += 0.5 * (prev + total2) * (tau_grid[i] - tau_grid[i - 1]);
    st.zeta[i] = acc;
    prev = total2;
  }
  return st;
}

/// Shape-preserving solution of the Lambda adiabatic equations: the total
/// Rabi frequency is frozen in the retarded frame while the field ratio is
/// advected in stretched time; a nonzero two-photon detuning adds the phase
/// accumulated between emission and observation.
inline FieldSlice lambda_analytic_solution(const PulseSpec& probe, const PulseSpec& control,
                                           double delta, double z,
                                           const std::vector<double>& tau_grid) {
  const StretchedTime st = stretched_time(probe, control, tau_grid);

  FieldSlice out;
  out.z = z;
  out.tau = tau_grid;
  out.omega.assign(2, std::vector<Complex>(tau_grid.size()));

  for (std::size_t i = 0; i < tau_grid.size(); ++i) {
    const double tau = tau_grid[i];
    const double a = evaluate(probe, tau);
    const double b = evaluate(control, tau);
    const double total = std::sqrt(a * a + b * b);

    const double t_src = st.inverse(st.forward(tau) - z);
    const double c_src = evaluate(control, t_src);
    if (std::abs(c_src) <= kFieldEpsilon)
      throw ControlVanishes("control field vanishes where the ratio is needed");
    const Complex ratio = (evaluate(probe, t_src) / c_src) *
                          std::exp(Complex(0.0, delta * (t_src - tau)));

    const Complex ctrl = total / std::sqrt(1.0 + std::norm(ratio));
    out.omega[1][i] = ctrl;
    out.omega[0][i] = ratio * ctrl;
  }
  return out;
}

// ---------------------------------------------------------------------------
// M-type scheme. Field order: omega_1_0, omega_1_1, omega_2_0, omega_2_2.

/// Field ratios, normalization factors and non-adiabatic couplings of the
/// M-type coupled/uncoupled decomposition.
struct MFrame {
  Complex chi1{}, chi2{};        // Omega_j0 / Omega_jj
  double n0 = 1.0;               // sqrt(1 + |chi1|^2 + |chi2|^2)
  double n1 = 1.0, n2 = 1.0;     // sqrt(1 + |chi_j|^2)
  Complex v1{}, v2{};            // couplings of the coupled-state equations
  Complex w1{}, w2{};            // excited-state coefficients, psi_ej = 2 W_j psi_U
  double delta_eff = 0.0;
};

inline MFrame m_frame(const FieldPoint& fields, const FieldPoint& derivs, double delta1,
                      double delta2) {
  const Complex o10 = fields[0], o11 = fields[1], o20 = fields[2], o22 = fields[3];
  const Complex d10 = derivs[0], d11 = derivs[1], d20 = derivs[2], d22 = derivs[3];
  if (std::abs(o11) <= kFieldEpsilon || std::abs(o22) <= kFieldEpsilon)
    throw ControlVanishes("M-type ratios need nonzero control fields");

  MFrame fr;
  fr.chi1 = o10 / o11;
  fr.chi2 = o20 / o22;
  const Complex dchi1 = (d10 * o11 - o10 * d11) / (o11 * o11);
  const Complex dchi2 = (d20 * o22 - o20 * d22) / (o22 * o22);
  fr.n0 = std::sqrt(1.0 + std::norm(fr.chi1) + std::norm(fr.chi2));
  fr.n1 = std::sqrt(1.0 + std::norm(fr.chi1));
  fr.n2 = std::sqrt(1.0 + std::norm(fr.chi2));

  const Complex i1(0.0, 1.0);
  fr.v1 = (i1 * dchi1 - delta1 * fr.chi1) / fr.n0;
  fr.v2 = (i1 * dchi2 - delta2 * fr.chi2) / fr.n0;

  const double n0sq = fr.n0 * fr.n0;
  const double dn0 =
      (std::real(std::conj(fr.chi1) * dchi1) + std::real(std::conj(fr.chi2) * dchi2)) / fr.n0;
  // i [ (1/N0) d(1/N0) + (chi1/N0) d(chi1*/N0) + (chi2/N0) d(chi2*/N0) ] is
  // real because the three weights are the components of a unit vector.
  const Complex sum = (1.0 / fr.n0) * (-dn0 / n0sq) +
                      (fr.chi1 / fr.n0) * (std::conj(dchi1) / fr.n0 - std::conj(fr.chi1) * dn0 / n0sq) +
                      (fr.chi2 / fr.n0) * (std::conj(dchi2) / fr.n0 - std::conj(fr.chi2) * dn0 / n0sq);
  fr.delta_eff = std::real(i1 * sum) + delta1 * std::norm(fr.chi1) / n0sq +
                 delta2 * std::norm(fr.chi2) / n0sq;

  fr.w1 = (fr.n2 * fr.n2 * fr.v1 - fr.chi1 * std::conj(fr.chi2) * fr.v2) / (std::conj(o11) * n0sq);
  fr.w2 = (fr.n1 * fr.n1 * fr.v2 - fr.chi2 * std::conj(fr.chi1) * fr.v1) / (std::conj(o22) * n0sq);
  return fr;
}

/// Group velocity of the equal-fields M configuration, in L_abs per 1/Gamma.
/// omega1_total is the total Rabi frequency of the first pair.
inline double m_group_velocity(double chi1_abs, double omega1_total) {
  const double n1sq = 1.0 + chi1_abs * chi1_abs;
  const double n0sq = 1.0 + 2.0 * chi1_abs * chi1_abs;
  return omega1_total * omega1_total * (n0sq * n0sq) / (n1sq * n1sq);
}

/// 2x2 matrix of inverse group velocity (delay in 1/Gamma per L_abs) plus the
/// diagonal two-photon detuning matrix that accompanies it in the transport
/// equation.
struct VelocityOperator {
  std::array<std::array<Complex, 2>, 2> m{};
  std::array<double, 2> detunings{};

  Complex det() const { return m[0][0] * m[1][1] - m[0][1] * m[1][0]; }
};

inline VelocityOperator m_velocity_matrix(const FieldPoint& fields, double delta1 = 0.0,
                                          double delta2 = 0.0) {
  const Complex o10 = fields[0], o11 = fields[1], o20 = fields[2], o22 = fields[3];
  if (std::abs(o11) <= kFieldEpsilon || std::abs(o22) <= kFieldEpsilon)
    throw ControlVanishes("M-type velocity matrix needs nonzero control fields");
  const Complex chi1 = o10 / o11, chi2 = o20 / o22;
  const double n1sq = 1.0 + std::norm(chi1);
  const double n2sq = 1.0 + std::norm(chi2);
  const double n0sq = 1.0 + std::norm(chi1) + std::norm(chi2);
  const double n0q = n0sq * n0sq;

  VelocityOperator v;
  v.m[0][0] = n1sq * n2sq / (std::norm(o11) * n0q);
  v.m[0][1] = -n1sq * chi1 * std::conj(chi2) / (std::norm(o11) * n0q);
  v.m[1][0] = -n2sq * chi2 * std::conj(chi1) / (std::norm(o22) * n0q);
  v.m[1][1] = n2sq * n1sq / (std::norm(o22) * n0q);
  v.detunings = {delta1, delta2};
  return v;
}

// ---------------------------------------------------------------------------
// Double-tripod scheme. Field order:
// omega_1_0, omega_1_1, omega_1_2, omega_2_0, omega_2_1, omega_2_2.

/// Dark-state coefficients and non-adiabatic couplings of the double tripod.
struct DTFrame {
  double omega1 = 0.0, omega2 = 0.0;  // total Rabi frequencies of each tripod
  std::array<Complex, 3> a{};         // dark-state coefficients A_l
  double n0 = 0.0;                    // normalization, n0^2 = O1^2 O2^2 - |cross|^2
  Complex cross{};                    // sum_l conj(Omega_2l) Omega_1l
  Complex v1{}, v2{};
  Complex w1{}, w2{};                 // psi_ej = 2 W_j psi_U
  double delta_eff = 0.0;
};

namespace detail {

struct DTFieldView {
  std::array<Complex, 3> o1, o2;  // omega_1_l, omega_2_l
  static DTFieldView from(const FieldPoint& f) {
    return {{f[0], f[1], f[2]}, {f[3], f[4], f[5]}};
  }
};

}  // namespace detail

inline DTFrame dt_frame(const FieldPoint& fields, const FieldPoint& derivs, double delta1,
                        double delta2) {
  const auto f = detail::DTFieldView::from(fields);
  const auto d = detail::DTFieldView::from(derivs);
  const std::array<double, 3> delta{0.0, delta1, delta2};

  // Cofactors of the field matrix; the dark state is their normalized row.
  const std::array<Complex, 3> c = {f.o1[1] * f.o2[2] - f.o1[2] * f.o2[1],
                                    f.o1[2] * f.o2[0] - f.o1[0] * f.o2[2],
                                    f.o1[0] * f.o2[1] - f.o1[1] * f.o2[0]};
  const std::array<Complex, 3> dc = {
      d.o1[1] * f.o2[2] + f.o1[1] * d.o2[2] - d.o1[2] * f.o2[1] - f.o1[2] * d.o2[1],
      d.o1[2] * f.o2[0] + f.o1[2] * d.o2[0] - d.o1[0] * f.o2[2] - f.o1[0] * d.o2[2],
      d.o1[0] * f.o2[1] + f.o1[0] * d.o2[1] - d.o1[1] * f.o2[0] - f.o1[1] * d.o2[0]};

  DTFrame fr;
  fr.n0 = std::sqrt(std::norm(c[0]) + std::norm(c[1]) + std::norm(c[2]));
  if (fr.n0 <= kFieldEpsilon)
    throw DegenerateDarkState("the two tripods are parallel, dark state undefined");

  double o1sq = 0.0, o2sq = 0.0;
  for (int l = 0; l < 3; ++l) {
    o1sq += std::norm(f.o1[static_cast<std::size_t>(l)]);
    o2sq += std::norm(f.o2[static_cast<std::size_t>(l)]);
    fr.cross += std::conj(f.o2[static_cast<std::size_t>(l)]) * f.o1[static_cast<std::size_t>(l)];
  }
  fr.omega1 = std::sqrt(o1sq);
  fr.omega2 = std::sqrt(o2sq);

  double dn0 = 0.0;
  for (int l = 0; l < 3; ++l)
    dn0 += std::real(std::conj(c[static_cast<std::size_t>(l)]) * dc[static_cast<std::size_t>(l)]);
  dn0 /= fr.n0;

  std::array<Complex, 3> da{};
  for (int l = 0; l < 3; ++l) {
    fr.a[static_cast<std::size_t>(l)] = c[static_cast<std::size_t>(l)] / fr.n0;
    da[static_cast<std::size_t>(l)] = dc[static_cast<std::size_t>(l)] / fr.n0 -
                                      c[static_cast<std::size_t>(l)] * dn0 / (fr.n0 * fr.n0);
  }

  const Complex i1(0.0, 1.0);
  Complex phase_sum{};
  Complex u1{}, u2{};  // u_j = Omega_j V_j
  for (int l = 0; l < 3; ++l) {
    const std::size_t k = static_cast<std::size_t>(l);
    phase_sum += fr.a[k] * std::conj(da[k]);
    u1 += fr.a[k] * (i1 * d.o1[k] + delta[k] * f.o1[k]);
    u2 += fr.a[k] * (i1 * d.o2[k] + delta[k] * f.o2[k]);
  }
  fr.delta_eff = std::real(i1 * phase_sum) + delta[1] * std::norm(fr.a[1]) +
                 delta[2] * std::norm(fr.a[2]);
  fr.v1 = u1 / fr.omega1;
  fr.v2 = u2 / fr.omega2;

  const double n0sq = fr.n0 * fr.n0;
  fr.w1 = (o2sq * u1 - fr.cross * u2) / n0sq;
  fr.w2 = (o1sq * u2 - std::conj(fr.cross) * u1) / n0sq;
  return fr;
}

inline VelocityOperator dt_velocity_matrix(const FieldPoint& fields, double delta1 = 0.0,
                                           double delta2 = 0.0) {
  const auto f = detail::DTFieldView::from(fields);
  double o1sq = 0.0, o2sq = 0.0;
  Complex cross{};
  for (int l = 0; l < 3; ++l) {
    const std::size_t k = static_cast<std::size_t>(l);
    o1sq += std::norm(f.o1[k]);
    o2sq += std::norm(f.o2[k]);
    cross += std::conj(f.o2[k]) * f.o1[k];
  }
  const double n0sq = o1sq * o2sq - std::norm(cross);
  if (n0sq <= kFieldEpsilon * kFieldEpsilon)
    throw DegenerateDarkState("the two tripods are parallel, dark state undefined");

  VelocityOperator v;
  v.m[0][0] = o2sq / n0sq;
  v.m[0][1] = -cross / n0sq;
  v.m[1][0] = -std::conj(cross) / n0sq;
  v.m[1][1] = o1sq / n0sq;
  v.detunings = {delta1, delta2};
  return v;
}

/// One eigenmode of the inverse-group-velocity matrix: the spinor direction
/// (1, xi) propagating at v_g.
struct NormalMode {
  double v_g = 0.0;                // L_abs per 1/Gamma
  Complex xi{};                    // Omega_2l = xi Omega_1l along the mode
  std::array<Complex, 2> eigvec{}; // normalized (1, xi) direction
  double inverse_velocity = 0.0;   // the eigenvalue itself
};

/// Both eigenmodes sorted by group velocity, slow mode first. The slow mode
/// carries the stricter adiabaticity requirement.
inline std::pair<NormalMode, NormalMode> dt_normal_modes(const VelocityOperator& v,
                                                         double rel_tol = 1e-9) {
  const Complex tr = v.m[0][0] + v.m[1][1];
  const Complex disc = std::sqrt(tr * tr - 4.0 * v.det());
  const Complex l1 = 0.5 * (tr + disc);
  const Complex l2 = 0.5 * (tr - disc);
  const double scale = std::max({std::abs(l1), std::abs(l2), 1e-300});
  if (std::abs(l1 - l2) <= rel_tol * scale)
    throw DegenerateModes("inverse-velocity eigenvalues coincide, modes not unique");

  const auto make = [&](const Complex& lambda) {
    NormalMode mode;
    mode.inverse_velocity = std::real(lambda);
    mode.v_g = 1.0 / std::real(lambda);
    const double off = std::max(std::abs(v.m[0][1]), std::abs(v.m[1][0]));
    if (off <= rel_tol * scale) {
      // Diagonal operator: the bare tripods are the modes.
      if (std::abs(lambda - v.m[0][0]) <= std::abs(lambda - v.m[1][1])) {
        mode.xi = 0.0;
        mode.eigvec = {1.0, 0.0};
      } else {
        mode.xi = Complex(std::numeric_limits<double>::infinity(), 0.0);
        mode.eigvec = {0.0, 1.0};
      }
      return mode;
    }
    if (std::abs(v.m[0][1]) >= std::abs(v.m[1][0]))
      mode.xi = (lambda - v.m[0][0]) / v.m[0][1];
    else
      mode.xi = v.m[1][0] / (lambda - v.m[1][1]);
    const double nrm = std::sqrt(1.0 + std::norm(mode.xi));
    mode.eigvec = {1.0 / nrm, mode.xi / nrm};
    return mode;
  };

  NormalMode a = make(l1), b = make(l2);
  if (a.v_g > b.v_g) std::swap(a, b);
  return {a, b};  // slow first
}

/// Componentwise adiabaticity monitor of the double tripod: max_j |W_j| and
/// the same quantity routed through the inverse-velocity matrix.
struct DTMonitor {
  double w_max = 0.0;
  std::array<double, 2> matrix_form{};  // |(c/g) v^-1 sum_l A_l (i d_t + delta_l) Omega_l|
  double threshold = 0.1;
  bool pass = true;
};

inline DTMonitor dt_adiabaticity(const DTFrame& frame, const VelocityOperator& v,
                                 double threshold = 0.1) {
  DTMonitor m;
  m.w_max = std::max(std::abs(frame.w1), std::abs(frame.w2));
  const Complex u1 = frame.v1 * frame.omega1;
  const Complex u2 = frame.v2 * frame.omega2;
  m.matrix_form[0] = std::abs(v.m[0][0] * u1 + v.m[0][1] * u2);
  m.matrix_form[1] = std::abs(v.m[1][0] * u1 + v.m[1][1] * u2);
  m.threshold = threshold;
  m.pass = std::max({m.w_max, m.matrix_form[0], m.matrix_form[1]}) <= threshold;
  return m;
}

/// Predicts the six double-tripod field profiles at depth z for a symmetric
/// constant background (omega_2_2 = omega_1_1, omega_2_1 = omega_1_2) probed
/// by a pair of pulses vanishing at early tau. The probe pair is decomposed
/// onto the two eigenmodes; each component advects with its own group
/// velocity; the control partners follow from the two conservation
/// constraints, taking the root continuously connected to the background.
inline FieldSlice dt_adiabaton_predict(const FieldPoint& background, const PulseSpec& probe1,
                                       const PulseSpec& probe2, double z,
                                       const std::vector<double>& tau_grid) {
  const double b1 = std::real(background[1]);  // omega_1_1
  const double b2 = std::real(background[2]);  // omega_1_2
  const auto near = [](double x, double y) { return std::abs(x - y) <= 1e-9 * std::max({std::abs(x), std::abs(y), 1.0}); };
  if (!near(std::real(background[5]), b1) || !near(std::real(background[4]), b2))
    throw std::invalid_argument("background must be symmetric between the tripods");
  if (std::abs(background[0]) > kFieldEpsilon || std::abs(background[3]) > kFieldEpsilon)
    throw std::invalid_argument("background probe entries must vanish");

  FieldPoint bg = background;
  const auto modes = dt_normal_modes(dt_velocity_matrix(bg));
  const NormalMode& slow = modes.first;
  const NormalMode& fast = modes.second;
  const double xi_s = std::real(slow.xi);
  const double xi_f = std::real(fast.xi);

  const double sum_sq = b1 * b1 + b2 * b2;

  FieldSlice out;
  out.z = z;
  out.tau = tau_grid;
  out.omega.assign(6, std::vector<Complex>(tau_grid.size()));

  // Per-mode control reconstruction: with probe pair (q, xi q) the linear
  // constraint fixes omega_1_2 - xi omega_1_1 while the total Rabi frequency
  // fixes q^2 + omega_1_1^2 + omega_1_2^2; the branch sign keeps the q -> 0
  // limit at the background values.
  const auto control_root = [&](double xi, double q) {
    const double k = b2 - xi * b1;
    const double disc = 2.0 * sum_sq - k * k - 2.0 * q * q;
    if (disc < 0.0)
      throw NoRealRoot("probe too strong for the stated background");
    const double sigma = (b1 + xi * b2) >= 0.0 ? 1.0 : -1.0;
    const double c11 = 0.5 * (-xi * k + sigma * std::sqrt(disc));
    return std::pair<double, double>{c11, k + xi * c11};
  };

  const double denom = xi_f - xi_s;
  for (std::size_t i = 0; i < tau_grid.size(); ++i) {
    const double tau = tau_grid[i];
    const double ts = tau - z * slow.inverse_velocity;
    const double tf = tau - z * fast.inverse_velocity;
    const double qs = (xi_f * evaluate(probe1, ts) - evaluate(probe2, ts)) / denom;
    const double qf = (evaluate(probe2, tf) - xi_s * evaluate(probe1, tf)) / denom;

    const auto [c11_s, c12_s] = control_root(xi_s, qs);
    const auto [c11_f, c12_f] = control_root(xi_f, qf);
    const double c11 = b1 + (c11_s - b1) + (c11_f - b1);
    const double c12 = b2 + (c12_s - b2) + (c12_f - b2);

    out.omega[0][i] = qs + qf;                  // omega_1_0
    out.omega[1][i] = c11;                      // omega_1_1
    out.omega[2][i] = c12;                      // omega_1_2
    out.omega[3][i] = xi_s * qs + xi_f * qf;    // omega_2_0
    out.omega[4][i] = c12;                      // omega_2_1
    out.omega[5][i] = c11;                      // omega_2_2
  }
  return out;
}

}  // namespace adiabaton
