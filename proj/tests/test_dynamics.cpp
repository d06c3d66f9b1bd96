#include <catch2/catch_amalgamated.hpp>

#include "adiabaton/dynamics.hpp"
#include "test_util.hpp"

using namespace adiabaton;
using testutil::dense_rhs;

namespace {

const SchemeSpec kLambda = build_lambda(0.0, 1.0, 100.0, 1.0);
const SchemeSpec kLambdaDetuned = build_lambda(0.4, 1.0, 100.0, 1.0);
const SchemeSpec kM = build_m_type(0.2, -0.1, 1.0, 100.0, 1.0);
const SchemeSpec kDT = build_double_tripod(0.2, -0.1, 1.0, 100.0, 1.0);

}  // namespace

TEST_CASE("probe drives the excited amplitude from the ground state") {
  // psi = |0>, arbitrary probe: d(psi_e)/dtau = (i/2) Omega_0
  FieldPoint f = FieldPoint::zero(kLambda);
  f[0] = Complex(0.7, -0.2);
  f[1] = Complex(1.1, 0.3);
  const AtomState d = atomic_rhs(kLambda, f, AtomState::initial(kLambda));
  CHECK(std::abs(d.excited(0) - Complex(0.0, 0.5) * f[0]) < 1e-15);
  CHECK(std::abs(d.ground(0)) < 1e-15);
}

TEST_CASE("with no fields an excited amplitude decays at Gamma/2") {
  for (const SchemeSpec& s : {kLambda, kM, kDT}) {
    for (int j = 0; j < s.n_excited; ++j) {
      AtomState st = AtomState::zero(s);
      st.excited(j) = 1.0;
      const AtomState d = atomic_rhs(s, FieldPoint::zero(s), st);
      CHECK(std::abs(d.excited(j) - Complex(-0.5 * s.gamma, 0.0)) < 1e-15);
    }
  }
}

TEST_CASE("the lambda dark state is stationary for constant resonant fields") {
  auto g = testutil::rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const FieldPoint f = testutil::random_fields(kLambda, g);
    if (std::abs(f[0]) + std::abs(f[1]) < 0.1) continue;
    const AtomState dark = lambda_dark_state(kLambda, f);
    const AtomState d = atomic_rhs(kLambda, f, dark);
    for (int i = 0; i < d.size(); ++i)
      CHECK(std::abs(d.psi[static_cast<std::size_t>(i)]) < 1e-14);
  }
}

TEST_CASE("rhs agrees with the dense Hamiltonian on random inputs") {
  auto g = testutil::rng(13);
  for (const SchemeSpec& s : {kLambda, kLambdaDetuned, kM, kDT}) {
    for (int trial = 0; trial < 200; ++trial) {
      const FieldPoint f = testutil::random_fields(s, g);
      const AtomState st = testutil::random_state(s, g);
      const AtomState a = atomic_rhs(s, f, st);
      const AtomState b = dense_rhs(s, f, st);
      for (int i = 0; i < s.n_levels(); ++i)
        CHECK(std::abs(a.psi[static_cast<std::size_t>(i)] - b.psi[static_cast<std::size_t>(i)]) <
              1e-14);
    }
  }
}

TEST_CASE("norm dissipation equals the excited population times Gamma") {
  auto g = testutil::rng(17);
  for (const SchemeSpec& s : {kLambda, kLambdaDetuned, kM, kDT}) {
    for (int trial = 0; trial < 200; ++trial) {
      const FieldPoint f = testutil::random_fields(s, g);
      const AtomState st = testutil::random_state(s, g);
      const AtomState d = atomic_rhs(s, f, st);
      double ddt_norm = 0.0;
      for (int i = 0; i < s.n_levels(); ++i)
        ddt_norm += 2.0 * std::real(std::conj(st.psi[static_cast<std::size_t>(i)]) *
                                    d.psi[static_cast<std::size_t>(i)]);
      double excited = 0.0;
      for (int j = 0; j < s.n_excited; ++j) excited += std::norm(st.excited(j));
      CHECK(ddt_norm == Catch::Approx(-s.gamma * excited).margin(1e-13));
    }
  }
}

TEST_CASE("field source vanishes without excited amplitude") {
  auto g = testutil::rng(19);
  for (const SchemeSpec& s : {kLambda, kM, kDT}) {
    AtomState st = testutil::random_state(s, g);
    for (int j = 0; j < s.n_excited; ++j) st.excited(j) = 0.0;
    for (int f = 0; f < s.n_fields(); ++f) CHECK(std::abs(field_source(s, st, f)) == 0.0);
  }
}

TEST_CASE("field source value matches the direct product") {
  AtomState st = AtomState::zero(kLambda);
  st.ground(0) = 1.0;
  st.excited(0) = Complex(0.0, 0.1);
  const Complex src = field_source(kLambda, st, 0);
  CHECK(src.real() == Catch::Approx(-0.05).margin(1e-16));
  CHECK(src.imag() == Catch::Approx(0.0).margin(1e-16));
}

TEST_CASE("field source is antilinear in the ground amplitude, linear in the excited one") {
  auto g = testutil::rng(23);
  for (const SchemeSpec& s : {kLambda, kM, kDT}) {
    for (int trial = 0; trial < 50; ++trial) {
      const AtomState st = testutil::random_state(s, g);
      const double phi = 1.234;
      for (int f = 0; f < s.n_fields(); ++f) {
        const Coupling& c = s.couplings[static_cast<std::size_t>(f)];
        const Complex base = field_source(s, st, f);

        AtomState rot = st;
        rot.ground(c.ground) *= std::exp(Complex(0.0, phi));
        CHECK(std::abs(field_source(s, rot, f) - base * std::exp(Complex(0.0, -phi))) < 1e-14);

        AtomState scaled = st;
        scaled.excited(c.excited) *= Complex(2.0, 0.5);
        CHECK(std::abs(field_source(s, scaled, f) - base * Complex(2.0, 0.5)) < 1e-14);
      }
    }
  }
}

TEST_CASE("coupling scale rescales the source") {
  auto g = testutil::rng(29);
  const AtomState st = testutil::random_state(kDT, g);
  for (int f = 0; f < kDT.n_fields(); ++f) {
    CHECK(std::abs(field_source(kDT, st, f, 0.0)) == 0.0);
    CHECK(std::abs(field_source(kDT, st, f, 2.0) - 2.0 * field_source(kDT, st, f)) < 1e-14);
  }
}

TEST_CASE("mismatched sizes are rejected") {
  FieldPoint f = FieldPoint::zero(kM);  // 4 entries
  CHECK_THROWS_AS(atomic_rhs(kLambda, f, AtomState::initial(kLambda)), SchemeMismatch);
  CHECK_THROWS_AS(atomic_rhs(kM, f, AtomState::initial(kLambda)), SchemeMismatch);
  CHECK_THROWS_AS(field_source(kLambda, AtomState::initial(kLambda), 7), SchemeMismatch);
}
