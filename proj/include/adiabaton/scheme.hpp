#pragma once

// Coupling schemes for coherently driven multilevel media. A SchemeSpec is
// validated data: which Rabi frequency drives which |ground> -> |excited>
// transition, the two-photon detunings, the excited-state decay rate and the
// atom-light coupling strength expressed through the optical depth.
//
// All downstream computation is dimensionless: gamma sets the time unit
// (times in 1/Gamma, Rabi frequencies in Gamma) and the absorption length
// L_abs = L/alpha sets the length unit. With that convention the field
// propagation coefficient g/c equals one per absorption length.

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "adiabaton/errors.hpp"

namespace adiabaton {

enum class SchemeKind { Lambda, MType, DoubleTripod };

inline const char* to_string(SchemeKind k) {
  switch (k) {
    case SchemeKind::Lambda: return "lambda";
    case SchemeKind::MType: return "m_type";
    case SchemeKind::DoubleTripod: return "double_tripod";
  }
  return "unknown";
}

/// One laser field driving the transition |ground> -> |e_(excited+1)>.
struct Coupling {
  int field_id;
  int excited;  // 0-based excited-level index
  int ground;   // ground-level index
};

struct SchemeSpec {
  SchemeKind kind = SchemeKind::Lambda;
  int n_ground = 0;
  int n_excited = 0;
  std::vector<Coupling> couplings;  // indexed by field_id
  std::vector<double> detunings;    // per ground level, detunings[0] == 0; units Gamma
  double gamma = 1.0;               // excited-state decay rate (the global time unit)
  double alpha = 1.0;               // optical depth of the medium
  double length = 1.0;              // medium length L

  int n_levels() const { return n_ground + n_excited; }
  int n_fields() const { return static_cast<int>(couplings.size()); }
  double absorption_length() const { return length / alpha; }

  /// Canonical field name "omega_<j>_<l>" with 1-based excited index j.
  std::string field_name(int field_id) const {
    const Coupling& c = couplings.at(static_cast<std::size_t>(field_id));
    return "omega_" + std::to_string(c.excited + 1) + "_" + std::to_string(c.ground);
  }

  int field_index(int excited, int ground) const {
    for (const Coupling& c : couplings)
      if (c.excited == excited && c.ground == ground) return c.field_id;
    throw SchemeMismatch("no field drives |" + std::to_string(ground) + "> -> |e_" +
                         std::to_string(excited + 1) + ">");
  }
};

namespace detail {

inline std::vector<std::pair<int, int>> required_pattern(SchemeKind kind) {
  switch (kind) {
    case SchemeKind::Lambda:
      return {{0, 0}, {0, 1}};
    case SchemeKind::MType:
      return {{0, 0}, {0, 1}, {1, 0}, {1, 2}};
    case SchemeKind::DoubleTripod:
      return {{0, 0}, {0, 1}, {0, 2}, {1, 0}, {1, 1}, {1, 2}};
  }
  return {};
}

}  // namespace detail

/// Checks every SchemeSpec invariant; throws on the first violation.
inline void validate(const SchemeSpec& s) {
  if (!(s.gamma > 0.0) || !std::isfinite(s.gamma))
    throw NonPositiveParameter("gamma must be positive");
  if (!(s.alpha > 0.0) || !std::isfinite(s.alpha))
    throw NonPositiveParameter("alpha must be positive");
  if (!(s.length > 0.0) || !std::isfinite(s.length))
    throw NonPositiveParameter("length must be positive");

  const int want_ground = (s.kind == SchemeKind::Lambda) ? 2 : 3;
  const int want_excited = (s.kind == SchemeKind::Lambda) ? 1 : 2;
  if (s.n_ground != want_ground || s.n_excited != want_excited)
    throw SchemeMismatch("level counts do not match scheme kind");

  if (static_cast<int>(s.detunings.size()) != s.n_ground)
    throw SchemeMismatch("one detuning per ground level required");
  if (s.detunings[0] != 0.0)
    throw SchemeMismatch("detuning of level 0 must be zero");
  for (double d : s.detunings)
    if (!std::isfinite(d)) throw NonFiniteDetected("non-finite detuning");

  const auto pattern = detail::required_pattern(s.kind);
  if (s.couplings.size() != pattern.size())
    throw IncompleteScheme("scheme requires " + std::to_string(pattern.size()) + " fields");

  std::set<std::pair<int, int>> seen;
  for (int f = 0; f < s.n_fields(); ++f) {
    const Coupling& c = s.couplings[static_cast<std::size_t>(f)];
    if (c.field_id != f) throw SchemeMismatch("couplings must be ordered by field_id");
    if (c.excited < 0 || c.excited >= s.n_excited || c.ground < 0 || c.ground >= s.n_ground)
      throw SchemeMismatch("coupling references an invalid level");
    if (!seen.insert({c.excited, c.ground}).second)
      throw DuplicateCoupling("transition driven by more than one field");
  }
  for (const auto& p : pattern)
    if (seen.find(p) == seen.end())
      throw IncompleteScheme("missing coupling (" + std::to_string(p.first + 1) + "," +
                             std::to_string(p.second) + ")");
}

namespace detail {

inline SchemeSpec build_scheme(SchemeKind kind, std::vector<double> detunings, double gamma,
                               double alpha, double length) {
  SchemeSpec s;
  s.kind = kind;
  s.n_ground = (kind == SchemeKind::Lambda) ? 2 : 3;
  s.n_excited = (kind == SchemeKind::Lambda) ? 1 : 2;
  s.detunings = std::move(detunings);
  s.gamma = gamma;
  s.alpha = alpha;
  s.length = length;
  int id = 0;
  for (const auto& [j, l] : required_pattern(kind)) s.couplings.push_back({id++, j, l});
  validate(s);
  return s;
}

}  // namespace detail

/// Three-level Lambda scheme: fields omega_1_0 (probe) and omega_1_1 (control).
inline SchemeSpec build_lambda(double delta, double gamma, double alpha, double length) {
  return detail::build_scheme(SchemeKind::Lambda, {0.0, delta}, gamma, alpha, length);
}

/// Five-level M scheme: fields omega_1_0, omega_1_1, omega_2_0, omega_2_2.
inline SchemeSpec build_m_type(double delta1, double delta2, double gamma, double alpha,
                               double length) {
  return detail::build_scheme(SchemeKind::MType, {0.0, delta1, delta2}, gamma, alpha, length);
}

/// Five-level double-tripod scheme: all six omega_j_l.
inline SchemeSpec build_double_tripod(double delta1, double delta2, double gamma, double alpha,
                                      double length) {
  return detail::build_scheme(SchemeKind::DoubleTripod, {0.0, delta1, delta2}, gamma, alpha,
                              length);
}

// ---------------------------------------------------------------------------
// Boundary pulse shapes. Amplitudes in Gamma, times in 1/Gamma.

struct GaussianPulse {
  double amplitude;
  double center;  // t0
  double width;   // tau0 in  A exp[-(t-t0)^2/tau0^2]
};

struct ConstantPulse {
  double amplitude;
};

/// Piecewise-linear samples; evaluation clamps to the endpoints outside.
struct TabulatedPulse {
  std::vector<double> tau;
  std::vector<double> value;
};

using PulseSpec = std::variant<GaussianPulse, ConstantPulse, TabulatedPulse>;

inline void validate(const PulseSpec& p) {
  if (const auto* g = std::get_if<GaussianPulse>(&p)) {
    if (!(g->width > 0.0)) throw NonPositiveParameter("gaussian width must be positive");
    if (!std::isfinite(g->amplitude) || !std::isfinite(g->center) || !std::isfinite(g->width))
      throw NonFiniteDetected("non-finite gaussian parameter");
  } else if (const auto* c = std::get_if<ConstantPulse>(&p)) {
    if (!std::isfinite(c->amplitude)) throw NonFiniteDetected("non-finite constant amplitude");
  } else {
    const auto& t = std::get<TabulatedPulse>(p);
    if (t.tau.size() != t.value.size() || t.tau.size() < 2)
      throw NonPositiveParameter("tabulated pulse needs >= 2 matching samples");
    for (std::size_t i = 0; i < t.tau.size(); ++i) {
      if (!std::isfinite(t.tau[i]) || !std::isfinite(t.value[i]))
        throw NonFiniteDetected("non-finite tabulated sample");
      if (i > 0 && !(t.tau[i] > t.tau[i - 1]))
        throw NonPositiveParameter("tabulated tau samples must increase");
    }
  }
}

inline double evaluate(const PulseSpec& p, double tau) {
  if (const auto* g = std::get_if<GaussianPulse>(&p)) {
    const double u = (tau - g->center) / g->width;
    return g->amplitude * std::exp(-u * u);
  }
  if (const auto* c = std::get_if<ConstantPulse>(&p)) return c->amplitude;
  const auto& t = std::get<TabulatedPulse>(p);
  if (tau <= t.tau.front()) return t.value.front();
  if (tau >= t.tau.back()) return t.value.back();
  const auto it = std::upper_bound(t.tau.begin(), t.tau.end(), tau);
  const std::size_t k = static_cast<std::size_t>(it - t.tau.begin()) - 1;
  const double w = (tau - t.tau[k]) / (t.tau[k + 1] - t.tau[k]);
  return t.value[k] + w * (t.value[k + 1] - t.value[k]);
}

/// Analytic time derivative of the pulse envelope (interpolant slope for
/// tabulated pulses, zero outside their range).
inline double evaluate_derivative(const PulseSpec& p, double tau) {
  if (const auto* g = std::get_if<GaussianPulse>(&p)) {
    const double u = (tau - g->center) / g->width;
    return g->amplitude * std::exp(-u * u) * (-2.0 * u / g->width);
  }
  if (std::get_if<ConstantPulse>(&p)) return 0.0;
  const auto& t = std::get<TabulatedPulse>(p);
  if (tau <= t.tau.front() || tau >= t.tau.back()) return 0.0;
  const auto it = std::upper_bound(t.tau.begin(), t.tau.end(), tau);
  const std::size_t k = static_cast<std::size_t>(it - t.tau.begin()) - 1;
  return (t.value[k + 1] - t.value[k]) / (t.tau[k + 1] - t.tau[k]);
}

}  // namespace adiabaton
