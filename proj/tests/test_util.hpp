#pragma once

// Shared helpers for the test suites: seeded random states/fields and smooth
// parametrized field families with analytic time derivatives.

#include <complex>
#include <random>
#include <vector>

#include "adiabaton/dynamics.hpp"

namespace testutil {

using adiabaton::AtomState;
using adiabaton::Complex;
using adiabaton::FieldPoint;
using adiabaton::SchemeSpec;

inline std::mt19937_64 rng(std::uint64_t seed = 0x5eed5eedULL) { return std::mt19937_64(seed); }

inline Complex random_complex(std::mt19937_64& g, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  return {d(g), d(g)};
}

inline AtomState random_state(const SchemeSpec& s, std::mt19937_64& g) {
  AtomState st = AtomState::zero(s);
  for (int i = 0; i < st.size(); ++i) st.psi[static_cast<std::size_t>(i)] = random_complex(g);
  return st;
}

inline FieldPoint random_fields(const SchemeSpec& s, std::mt19937_64& g, double lo = -2.0,
                                double hi = 2.0) {
  FieldPoint f = FieldPoint::zero(s);
  for (int k = 0; k < f.n; ++k) f[k] = random_complex(g, lo, hi);
  return f;
}

/// Smooth complex field with analytic derivative, bounded away from zero:
/// (a + b sin(w t + p)) exp(i (c t + e sin(v t))).
struct SmoothField {
  double a, b, w, p, c, e, v;

  Complex value(double t) const {
    const double mag = a + b * std::sin(w * t + p);
    const double phase = c * t + e * std::sin(v * t);
    return mag * std::exp(Complex(0.0, phase));
  }
  Complex derivative(double t) const {
    const double mag = a + b * std::sin(w * t + p);
    const double dmag = b * w * std::cos(w * t + p);
    const double phase = c * t + e * std::sin(v * t);
    const double dphase = c + e * v * std::cos(v * t);
    return (dmag + Complex(0.0, dphase) * mag) * std::exp(Complex(0.0, phase));
  }

  static SmoothField random(std::mt19937_64& g) {
    std::uniform_real_distribution<double> amp(0.8, 2.0), mod(0.05, 0.5), freq(0.1, 1.2),
        ph(0.0, 6.28), chirp(-0.4, 0.4);
    return {amp(g), mod(g), freq(g), ph(g), chirp(g), mod(g), freq(g)};
  }
};

/// One smooth field per scheme field, with values and derivatives at t.
struct SmoothFieldSet {
  std::vector<SmoothField> fields;

  static SmoothFieldSet random(const SchemeSpec& s, std::mt19937_64& g) {
    SmoothFieldSet set;
    for (int k = 0; k < s.n_fields(); ++k) set.fields.push_back(SmoothField::random(g));
    return set;
  }
  FieldPoint values(const SchemeSpec& s, double t) const {
    FieldPoint f = FieldPoint::zero(s);
    for (int k = 0; k < f.n; ++k) f[k] = fields[static_cast<std::size_t>(k)].value(t);
    return f;
  }
  FieldPoint derivatives(const SchemeSpec& s, double t) const {
    FieldPoint f = FieldPoint::zero(s);
    for (int k = 0; k < f.n; ++k) f[k] = fields[static_cast<std::size_t>(k)].derivative(t);
    return f;
  }
};

/// Dense Hamiltonian assembled level by level, independently of the library's
/// right-hand-side path: dpsi/dt = -i H psi.
inline AtomState dense_rhs(const SchemeSpec& s, const FieldPoint& f, const AtomState& st) {
  const int n = s.n_levels();
  std::vector<std::vector<Complex>> H(static_cast<std::size_t>(n),
                                      std::vector<Complex>(static_cast<std::size_t>(n)));
  for (int l = 0; l < s.n_ground; ++l)
    H[static_cast<std::size_t>(l)][static_cast<std::size_t>(l)] =
        s.detunings[static_cast<std::size_t>(l)];
  for (int j = 0; j < s.n_excited; ++j) {
    const int e = s.n_ground + j;
    H[static_cast<std::size_t>(e)][static_cast<std::size_t>(e)] = Complex(0.0, -0.5 * s.gamma);
  }
  for (const adiabaton::Coupling& c : s.couplings) {
    const int e = s.n_ground + c.excited;
    H[static_cast<std::size_t>(e)][static_cast<std::size_t>(c.ground)] += -0.5 * f[c.field_id];
    H[static_cast<std::size_t>(c.ground)][static_cast<std::size_t>(e)] +=
        -0.5 * std::conj(f[c.field_id]);
  }
  AtomState out = AtomState::zero(s);
  for (int r = 0; r < n; ++r) {
    Complex acc{};
    for (int col = 0; col < n; ++col)
      acc += H[static_cast<std::size_t>(r)][static_cast<std::size_t>(col)] *
             st.psi[static_cast<std::size_t>(col)];
    out.psi[static_cast<std::size_t>(r)] = Complex(0.0, -1.0) * acc;
  }
  return out;
}

}  // namespace testutil
