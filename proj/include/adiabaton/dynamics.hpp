#pragma once

// Right-hand-side evaluators for the coupled atom-field system. These are
// pure functions of (scheme, fields, state); the marching logic lives in
// integrator.hpp so that the derivatives can be tested against dense-matrix
// and finite-difference oracles without a time loop.

#include <array>
#include <cmath>
#include <complex>

#include "adiabaton/scheme.hpp"

namespace adiabaton {

using Complex = std::complex<double>;

/// Probability amplitudes of all levels, ordered [ground..., excited...].
struct AtomState {
  std::array<Complex, 5> psi{};
  int n_ground = 0;
  int n_excited = 0;

  int size() const { return n_ground + n_excited; }
  Complex ground(int l) const { return psi[static_cast<std::size_t>(l)]; }
  Complex excited(int j) const { return psi[static_cast<std::size_t>(n_ground + j)]; }
  Complex& ground(int l) { return psi[static_cast<std::size_t>(l)]; }
  Complex& excited(int j) { return psi[static_cast<std::size_t>(n_ground + j)]; }

  double norm2() const {
    double s = 0.0;
    for (int i = 0; i < size(); ++i) s += std::norm(psi[static_cast<std::size_t>(i)]);
    return s;
  }

  /// All population in ground level 0.
  static AtomState initial(const SchemeSpec& s) {
    AtomState st;
    st.n_ground = s.n_ground;
    st.n_excited = s.n_excited;
    st.psi[0] = 1.0;
    return st;
  }

  static AtomState zero(const SchemeSpec& s) {
    AtomState st;
    st.n_ground = s.n_ground;
    st.n_excited = s.n_excited;
    return st;
  }
};

/// Complex Rabi frequency of every field at one space-time point; entries
/// follow the scheme's field_id order.
struct FieldPoint {
  std::array<Complex, 6> omega{};
  int n = 0;

  Complex operator[](int f) const { return omega[static_cast<std::size_t>(f)]; }
  Complex& operator[](int f) { return omega[static_cast<std::size_t>(f)]; }

  static FieldPoint zero(const SchemeSpec& s) {
    FieldPoint f;
    f.n = s.n_fields();
    return f;
  }
};

namespace detail {

// d(psi)/dtau = -i H psi with the rotating-frame Hamiltonian assembled from
// the coupling list; the excited-state decay enters as -Gamma/2.
inline void atomic_rhs_core(const SchemeSpec& s, const Complex* omega, const Complex* psi,
                            Complex* dpsi) {
  const int ng = s.n_ground;
  for (int l = 0; l < ng; ++l) {
    const double d = s.detunings[static_cast<std::size_t>(l)];
    dpsi[l] = Complex(0.0, -d) * psi[l];
  }
  for (int j = 0; j < s.n_excited; ++j) dpsi[ng + j] = (-0.5 * s.gamma) * psi[ng + j];
  for (const Coupling& c : s.couplings) {
    const Complex om = omega[c.field_id];
    const Complex half_i{0.0, 0.5};
    dpsi[c.ground] += half_i * std::conj(om) * psi[ng + c.excited];
    dpsi[ng + c.excited] += half_i * om * psi[c.ground];
  }
}

}  // namespace detail

/// Time derivative of the atomic amplitudes at fixed position.
inline AtomState atomic_rhs(const SchemeSpec& s, const FieldPoint& fields, const AtomState& state) {
  if (fields.n != s.n_fields() || state.size() != s.n_levels())
    throw SchemeMismatch("field/level counts do not match the scheme");
  AtomState out = AtomState::zero(s);
  detail::atomic_rhs_core(s, fields.omega.data(), state.psi.data(), out.psi.data());
  return out;
}

/// Source of the field equation in the retarded frame, d(omega)/dz per
/// absorption length: (i/2) g psi_e psi_l^* with the dimensionless g/c = 1.
/// coupling_scale rescales g (0 gives the empty-medium control).
inline Complex field_source(const SchemeSpec& s, const AtomState& state, int field_id,
                            double coupling_scale = 1.0) {
  if (state.size() != s.n_levels())
    throw SchemeMismatch("level count does not match the scheme");
  if (field_id < 0 || field_id >= s.n_fields()) throw SchemeMismatch("invalid field id");
  const Coupling& c = s.couplings[static_cast<std::size_t>(field_id)];
  return Complex(0.0, 0.5 * coupling_scale) * state.excited(c.excited) *
         std::conj(state.ground(c.ground));
}

/// The Lambda uncoupled (dark) superposition (Omega_1, -Omega_0)/Omega on the
/// ground manifold; stationary under the dynamics for constant resonant fields.
inline AtomState lambda_dark_state(const SchemeSpec& s, const FieldPoint& fields) {
  if (s.kind != SchemeKind::Lambda) throw SchemeMismatch("dark state helper is for Lambda");
  const Complex o0 = fields[0], o1 = fields[1];
  const double total = std::sqrt(std::norm(o0) + std::norm(o1));
  if (total <= 0.0) throw ZeroTotalField("both Lambda fields vanish");
  AtomState st = AtomState::zero(s);
  st.ground(0) = o1 / total;
  st.ground(1) = -o0 / total;
  return st;
}

}  // namespace adiabaton
