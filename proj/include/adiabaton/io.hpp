#pragma once

// Run configuration, serialization and the command implementations behind the
// CLI. Configs are JSON with a schema_version field; unknown keys are
// rejected. Numeric output is written with 17 significant digits through
// std::to_chars, so every emitted value re-parses bit-exactly and is
// independent of the process locale.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "adiabaton/diagnostics.hpp"

namespace adiabaton {

using nlohmann::json;

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kGenerator = "adiabaton 0.1.0";

// ---------------------------------------------------------------------------
// Locale-independent number formatting

inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
  double v = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  while (begin != end && *begin == ' ') ++begin;
  const auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc()) throw IoError("cannot parse number: " + std::string(s));
  return v;
}

inline std::uint64_t fnv1a(std::string_view data) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string checksum_hex(std::string_view data) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a(data)));
  return buf;
}

// ---------------------------------------------------------------------------
// Config parsing

struct OutputConfig {
  bool emit_binary = false;
  std::vector<double> plot_z;  // defaults to {0, z_max} when plots are requested
};

struct OracleConfig {
  std::optional<double> z;  // defaults to grid.z_max
  std::vector<double> m_velocity_chi1 = {0.0, 0.5, 1.0};
};

struct RunConfig {
  SchemeSpec scheme;
  double coupling_scale = 1.0;
  std::vector<PulseSpec> boundary;  // indexed by field_id
  GridSpec grid;
  DiagnosticsOptions diagnostics;
  OutputConfig output;
  OracleConfig oracle;
  std::int64_t seed = 0;  // reserved; the core is deterministic
  json raw;               // schema echo for the metadata record
};

namespace detail {

inline void check_keys(const json& obj, const std::string& context,
                       const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw ConfigInvalid(context + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (allowed.find(key) == allowed.end())
      throw ConfigInvalid("unknown key '" + key + "' in " + context);
  }
}

inline const json& require(const json& obj, const std::string& key, const std::string& context) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw ConfigInvalid("missing key '" + key + "' in " + context);
  return *it;
}

inline double as_number(const json& j, const std::string& context) {
  if (!j.is_number()) throw ConfigInvalid(context + " must be a number");
  return j.get<double>();
}

inline PulseSpec parse_pulse(const json& j, const std::string& context) {
  check_keys(j, context, {"shape", "amplitude", "center", "width", "tau", "value"});
  const std::string shape = require(j, "shape", context).get<std::string>();
  PulseSpec p;
  if (shape == "gaussian") {
    p = GaussianPulse{as_number(require(j, "amplitude", context), context + ".amplitude"),
                      as_number(require(j, "center", context), context + ".center"),
                      as_number(require(j, "width", context), context + ".width")};
  } else if (shape == "constant") {
    p = ConstantPulse{as_number(require(j, "amplitude", context), context + ".amplitude")};
  } else if (shape == "tabulated") {
    TabulatedPulse t;
    for (const json& v : require(j, "tau", context)) t.tau.push_back(as_number(v, context));
    for (const json& v : require(j, "value", context)) t.value.push_back(as_number(v, context));
    p = std::move(t);
  } else {
    throw ConfigInvalid("unknown pulse shape '" + shape + "' in " + context);
  }
  try {
    validate(p);
  } catch (const Error& e) {
    throw ConfigInvalid(context + ": " + e.what());
  }
  return p;
}

inline FieldCombination parse_combination(const json& j, const SchemeSpec& scheme,
                                          const std::string& context) {
  const auto id_of = [&](const std::string& name) {
    for (int f = 0; f < scheme.n_fields(); ++f)
      if (scheme.field_name(f) == name) return f;
    throw ConfigInvalid(context + ": unknown field '" + name + "'");
  };
  FieldCombination combo;
  if (j.is_string()) {
    const std::string name = j.get<std::string>();
    combo.terms.push_back({id_of(name), 1.0});
    combo.label = name;
    return combo;
  }
  if (!j.is_array()) throw ConfigInvalid(context + " must be a field name or an array of terms");
  std::string label;
  for (const json& term : j) {
    check_keys(term, context + " term", {"field", "re", "im"});
    const std::string name = require(term, "field", context).get<std::string>();
    const double re = term.contains("re") ? as_number(term["re"], context) : 1.0;
    const double im = term.contains("im") ? as_number(term["im"], context) : 0.0;
    combo.terms.push_back({id_of(name), Complex(re, im)});
    if (!label.empty()) label += "+";
    label += name;
  }
  combo.label = label;
  return combo;
}

}  // namespace detail

inline RunConfig load_config(const json& j) {
  using detail::as_number;
  using detail::check_keys;
  using detail::require;

  check_keys(j, "config",
             {"schema_version", "scheme", "boundary", "grid", "diagnostics", "output", "oracle",
              "seed"});
  const int version = require(j, "schema_version", "config").get<int>();
  if (version != kSchemaVersion)
    throw ConfigInvalid("unsupported schema_version " + std::to_string(version));

  RunConfig cfg;
  cfg.raw = j;

  // scheme
  const json& js = require(j, "scheme", "config");
  check_keys(js, "scheme",
             {"kind", "gamma", "alpha", "length", "delta", "delta1", "delta2", "coupling_scale"});
  const std::string kind = require(js, "kind", "scheme").get<std::string>();
  const double gamma = as_number(require(js, "gamma", "scheme"), "scheme.gamma");
  const double alpha = as_number(require(js, "alpha", "scheme"), "scheme.alpha");
  const double length = as_number(require(js, "length", "scheme"), "scheme.length");
  try {
    if (kind == "lambda") {
      cfg.scheme = build_lambda(as_number(require(js, "delta", "scheme"), "scheme.delta"), gamma,
                                alpha, length);
    } else if (kind == "m_type" || kind == "double_tripod") {
      const double d1 = as_number(require(js, "delta1", "scheme"), "scheme.delta1");
      const double d2 = as_number(require(js, "delta2", "scheme"), "scheme.delta2");
      cfg.scheme = (kind == "m_type") ? build_m_type(d1, d2, gamma, alpha, length)
                                      : build_double_tripod(d1, d2, gamma, alpha, length);
    } else {
      throw ConfigInvalid("unknown scheme kind '" + kind + "'");
    }
  } catch (const ConfigInvalid&) {
    throw;
  } catch (const Error& e) {
    throw ConfigInvalid(std::string("scheme: ") + e.what());
  }
  if (js.contains("coupling_scale")) {
    cfg.coupling_scale = as_number(js["coupling_scale"], "scheme.coupling_scale");
    if (cfg.coupling_scale < 0.0) throw ConfigInvalid("scheme.coupling_scale must be >= 0");
  }

  // boundary: exactly one pulse per field, keyed by canonical names
  const json& jb = require(j, "boundary", "config");
  std::set<std::string> names;
  for (int f = 0; f < cfg.scheme.n_fields(); ++f) names.insert(cfg.scheme.field_name(f));
  check_keys(jb, "boundary", names);
  for (int f = 0; f < cfg.scheme.n_fields(); ++f) {
    const std::string name = cfg.scheme.field_name(f);
    cfg.boundary.push_back(detail::parse_pulse(require(jb, name, "boundary"), "boundary." + name));
  }

  // grid
  const json& jg = require(j, "grid", "config");
  check_keys(jg, "grid",
             {"tau_min", "tau_max", "d_tau", "z_max", "d_z", "snapshot_stride_z",
              "tau_output_stride"});
  cfg.grid.tau_min = as_number(require(jg, "tau_min", "grid"), "grid.tau_min");
  cfg.grid.tau_max = as_number(require(jg, "tau_max", "grid"), "grid.tau_max");
  cfg.grid.d_tau = as_number(require(jg, "d_tau", "grid"), "grid.d_tau");
  cfg.grid.z_max = as_number(require(jg, "z_max", "grid"), "grid.z_max");
  cfg.grid.d_z = as_number(require(jg, "d_z", "grid"), "grid.d_z");
  if (jg.contains("snapshot_stride_z")) cfg.grid.snapshot_stride_z = jg["snapshot_stride_z"].get<int>();
  if (jg.contains("tau_output_stride")) cfg.grid.tau_output_stride = jg["tau_output_stride"].get<int>();
  try {
    validate(cfg.grid);
  } catch (const Error& e) {
    throw ConfigInvalid(std::string("grid: ") + e.what());
  }

  // diagnostics
  if (j.contains("diagnostics")) {
    const json& jd = j["diagnostics"];
    check_keys(jd, "diagnostics",
               {"adiabaticity_threshold", "steepening", "mode_projection", "shape"});
    if (jd.contains("adiabaticity_threshold"))
      cfg.diagnostics.adiabaticity_threshold =
          as_number(jd["adiabaticity_threshold"], "diagnostics.adiabaticity_threshold");
    if (jd.contains("steepening")) cfg.diagnostics.steepening = jd["steepening"].get<bool>();
    if (jd.contains("mode_projection")) cfg.diagnostics.modes = jd["mode_projection"].get<bool>();
    if (jd.contains("shape")) {
      const json& jsh = jd["shape"];
      check_keys(jsh, "diagnostics.shape", {"combination", "v_g", "z_ref", "z_probe"});
      DiagnosticsOptions::Shape sh{
          detail::parse_combination(require(jsh, "combination", "diagnostics.shape"), cfg.scheme,
                                    "diagnostics.shape.combination"),
          as_number(require(jsh, "v_g", "diagnostics.shape"), "v_g"),
          as_number(require(jsh, "z_ref", "diagnostics.shape"), "z_ref"),
          as_number(require(jsh, "z_probe", "diagnostics.shape"), "z_probe")};
      cfg.diagnostics.shape = std::move(sh);
    }
  }

  // output
  if (j.contains("output")) {
    const json& jo = j["output"];
    check_keys(jo, "output", {"emit_binary", "plot_z"});
    if (jo.contains("emit_binary")) cfg.output.emit_binary = jo["emit_binary"].get<bool>();
    if (jo.contains("plot_z"))
      for (const json& v : jo["plot_z"]) cfg.output.plot_z.push_back(as_number(v, "output.plot_z"));
  }

  // oracle
  if (j.contains("oracle")) {
    const json& jo = j["oracle"];
    check_keys(jo, "oracle", {"z", "m_velocity_chi1"});
    if (jo.contains("z")) cfg.oracle.z = as_number(jo["z"], "oracle.z");
    if (jo.contains("m_velocity_chi1")) {
      cfg.oracle.m_velocity_chi1.clear();
      for (const json& v : jo["m_velocity_chi1"])
        cfg.oracle.m_velocity_chi1.push_back(as_number(v, "oracle.m_velocity_chi1"));
    }
  }

  if (j.contains("seed")) cfg.seed = j["seed"].get<std::int64_t>();
  return cfg;
}

inline RunConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigInvalid("config is not valid JSON: " + std::string(e.what()));
  }
  return load_config(j);
}

// ---------------------------------------------------------------------------
// Field-slice serialization

inline std::string field_slice_csv(const FieldSlice& slice,
                                   const std::vector<std::string>& field_names) {
  std::string out;
  out += "# schema_version," + std::to_string(kSchemaVersion) + "\n";
  out += "# z," + format_double(slice.z) + "\n";
  out += "# columns,tau";
  for (const std::string& n : field_names) out += "," + n + "_re," + n + "_im";
  out += "\n";
  for (std::size_t i = 0; i < slice.tau.size(); ++i) {
    out += format_double(slice.tau[i]);
    for (std::size_t f = 0; f < slice.omega.size(); ++f) {
      out += "," + format_double(slice.omega[f][i].real());
      out += "," + format_double(slice.omega[f][i].imag());
    }
    out += "\n";
  }
  return out;
}

struct ParsedSlice {
  FieldSlice slice;
  std::vector<std::string> field_names;
};

inline ParsedSlice parse_field_slice_csv(const std::string& text, const std::string& origin) {
  ParsedSlice out;
  std::istringstream in(text);
  std::string line;
  bool have_columns = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream h(line.substr(1));
      std::string key;
      std::getline(h, key, ',');
      key.erase(0, key.find_first_not_of(' '));
      if (key == "z") {
        std::string v;
        std::getline(h, v);
        out.slice.z = parse_double(v);
      } else if (key == "columns") {
        std::string col;
        std::getline(h, col, ',');  // "tau"
        while (std::getline(h, col, ',')) {
          if (col.size() > 3 && col.substr(col.size() - 3) == "_re")
            out.field_names.push_back(col.substr(0, col.size() - 3));
        }
        out.slice.omega.assign(out.field_names.size(), {});
        have_columns = true;
      }
      continue;
    }
    if (!have_columns) throw IoError(origin + ": data before the columns header");
    std::istringstream row(line);
    std::string cell;
    std::getline(row, cell, ',');
    out.slice.tau.push_back(parse_double(cell));
    for (std::size_t f = 0; f < out.field_names.size(); ++f) {
      if (!std::getline(row, cell, ',')) throw IoError(origin + ": truncated row");
      const double re = parse_double(cell);
      if (!std::getline(row, cell, ',')) throw IoError(origin + ": truncated row");
      out.slice.omega[f].push_back(Complex(re, parse_double(cell)));
    }
  }
  if (!have_columns) throw IoError(origin + ": no columns header found");
  return out;
}

inline ParsedSlice read_field_slice_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_field_slice_csv(buf.str(), path.string());
}

/// Compact binary twin: little-endian doubles behind a small header.
inline std::string field_slice_binary(const FieldSlice& slice) {
  std::string out;
  const auto put_u64 = [&](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  };
  const auto put_f64 = [&](double d) {
    std::uint64_t v;
    std::memcpy(&v, &d, 8);
    put_u64(v);
  };
  out += "ADBN";
  put_u64(static_cast<std::uint64_t>(slice.omega.size()));
  put_u64(static_cast<std::uint64_t>(slice.tau.size()));
  put_f64(slice.z);
  for (double t : slice.tau) put_f64(t);
  for (const auto& row : slice.omega)
    for (const Complex& v : row) {
      put_f64(v.real());
      put_f64(v.imag());
    }
  return out;
}

// ---------------------------------------------------------------------------
// Diagnostics serialization

inline json to_json(const DiagnosticsReport& rep) {
  json j;
  j["norm_violation_max"] = rep.norm_violation_max;
  json cons = json::object();
  for (const auto& e : rep.conservation.entries) cons[e.name] = e.drift;
  j["conservation_drift"] = cons;
  if (rep.shape_error) j["shape_error"] = *rep.shape_error;
  if (rep.peak_fit) {
    json fit = {{"inverse_velocity", rep.peak_fit->inverse_velocity},
                {"points", rep.peak_fit->points}};
    if (std::isfinite(rep.peak_fit->v_g)) fit["v_g"] = rep.peak_fit->v_g;
    j["peak_velocity_fit"] = fit;
  }
  if (rep.steepening_curve) {
    json c = json::array();
    for (const auto& p : *rep.steepening_curve) c.push_back({{"z", p.z}, {"max_gradient", p.max_gradient}});
    j["steepening_curve"] = c;
  }
  if (rep.mode_projections) {
    json c = json::array();
    for (const auto& p : *rep.mode_projections)
      c.push_back({{"z", p.z},
                   {"slow_amplitude", p.slow_amplitude},
                   {"slow_tau", p.slow_tau},
                   {"fast_amplitude", p.fast_amplitude},
                   {"fast_tau", p.fast_tau}});
    j["mode_projections"] = c;
  }
  if (rep.adiabaticity_max) j["adiabaticity_max"] = *rep.adiabaticity_max;
  j["adiabaticity_threshold"] = rep.adiabaticity_threshold;
  j["flags"] = rep.flags;
  return j;
}

// ---------------------------------------------------------------------------
// Plots: self-contained SVG line charts, no external dependency.

struct PlotSeries {
  std::string label;
  std::vector<double> y;
};

inline std::string svg_line_plot(const std::string& title, const std::string& x_label,
                                 const std::string& y_label, const std::vector<double>& x,
                                 const std::vector<PlotSeries>& series) {
  const double width = 960, height = 540;
  const double ml = 70, mr = 24, mt = 44, mb = 52;
  const double pw = width - ml - mr, ph = height - mt - mb;

  double x_min = x.front(), x_max = x.back();
  double y_min = 0.0, y_max = 0.0;
  bool first = true;
  for (const PlotSeries& s : series)
    for (double v : s.y) {
      if (first) y_min = y_max = v, first = false;
      y_min = std::min(y_min, v);
      y_max = std::max(y_max, v);
    }
  if (y_max == y_min) y_max = y_min + 1.0;
  const double pad = 0.05 * (y_max - y_min);
  y_min -= pad;
  y_max += pad;

  const auto nice_step = [](double range) {
    const double raw = range / 6.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    const double r = raw / mag;
    return (r < 1.5 ? 1.0 : r < 3.5 ? 2.0 : r < 7.5 ? 5.0 : 10.0) * mag;
  };
  const auto fmt_tick = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return std::string(buf);
  };
  const auto px = [&](double v) { return ml + (v - x_min) / (x_max - x_min) * pw; };
  const auto py = [&](double v) { return mt + (y_max - v) / (y_max - y_min) * ph; };

  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  svg << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
  svg << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\""
      << " font-size=\"16\">" << title << "</text>\n";

  const double xs = nice_step(x_max - x_min), ys = nice_step(y_max - y_min);
  svg << "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#444\">\n";
  for (double v = std::ceil(x_min / xs) * xs; v <= x_max + 1e-9 * xs; v += xs) {
    svg << "<line x1=\"" << px(v) << "\" y1=\"" << mt << "\" x2=\"" << px(v) << "\" y2=\""
        << mt + ph << "\" stroke=\"#e0e0e0\"/>\n";
    svg << "<text x=\"" << px(v) << "\" y=\"" << mt + ph + 16 << "\" text-anchor=\"middle\">"
        << fmt_tick(v) << "</text>\n";
  }
  for (double v = std::ceil(y_min / ys) * ys; v <= y_max + 1e-9 * ys; v += ys) {
    svg << "<line x1=\"" << ml << "\" y1=\"" << py(v) << "\" x2=\"" << ml + pw << "\" y2=\""
        << py(v) << "\" stroke=\"#e0e0e0\"/>\n";
    svg << "<text x=\"" << ml - 6 << "\" y=\"" << py(v) + 4 << "\" text-anchor=\"end\">"
        << fmt_tick(v) << "</text>\n";
  }
  svg << "</g>\n";
  svg << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"#888\"/>\n";
  svg << "<text x=\"" << ml + pw / 2 << "\" y=\"" << height - 12
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" << x_label
      << "</text>\n";
  svg << "<text x=\"16\" y=\"" << mt + ph / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" transform=\"rotate(-90 16 "
      << mt + ph / 2 << ")\">" << y_label << "</text>\n";

  // Keep polylines modest in size.
  const std::size_t stride = std::max<std::size_t>(1, x.size() / 1200);
  for (std::size_t s = 0; s < series.size(); ++s) {
    svg << "<polyline fill=\"none\" stroke=\"" << palette[s % 6] << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < x.size(); i += stride) {
      char buf[40];
      std::snprintf(buf, sizeof(buf), "%.2f,%.2f ", px(x[i]), py(series[s].y[i]));
      svg << buf;
    }
    if ((x.size() - 1) % stride != 0) {
      char buf[40];
      std::snprintf(buf, sizeof(buf), "%.2f,%.2f ", px(x.back()), py(series[s].y.back()));
      svg << buf;
    }
    svg << "\"/>\n";
  }
  for (std::size_t s = 0; s < series.size(); ++s) {
    const double lx = ml + pw - 150, ly = mt + 18 + 18 * static_cast<double>(s);
    svg << "<line x1=\"" << lx << "\" y1=\"" << ly << "\" x2=\"" << lx + 26 << "\" y2=\"" << ly
        << "\" stroke=\"" << palette[s % 6] << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << lx + 32 << "\" y=\"" << ly + 4
        << "\" font-family=\"sans-serif\" font-size=\"12\">" << series[s].label << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

// ---------------------------------------------------------------------------
// Command implementations

namespace detail {

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << content;
  if (!out) throw IoError("failed while writing " + path.string());
}

inline std::string error_name(const std::exception& e) {
  if (dynamic_cast<const NonPositiveParameter*>(&e)) return "NonPositiveParameter";
  if (dynamic_cast<const DuplicateCoupling*>(&e)) return "DuplicateCoupling";
  if (dynamic_cast<const IncompleteScheme*>(&e)) return "IncompleteScheme";
  if (dynamic_cast<const SchemeMismatch*>(&e)) return "SchemeMismatch";
  if (dynamic_cast<const NonFiniteDetected*>(&e)) return "NonFiniteDetected";
  if (dynamic_cast<const ZeroTotalField*>(&e)) return "ZeroTotalField";
  if (dynamic_cast<const ControlVanishes*>(&e)) return "ControlVanishes";
  if (dynamic_cast<const DegenerateDarkState*>(&e)) return "DegenerateDarkState";
  if (dynamic_cast<const DegenerateModes*>(&e)) return "DegenerateModes";
  if (dynamic_cast<const NoRealRoot*>(&e)) return "NoRealRoot";
  if (dynamic_cast<const WindowClipped*>(&e)) return "WindowClipped";
  if (dynamic_cast<const ConfigInvalid*>(&e)) return "ConfigInvalid";
  if (dynamic_cast<const GridMismatch*>(&e)) return "GridMismatch";
  if (dynamic_cast<const IoError*>(&e)) return "IoError";
  if (dynamic_cast<const Error*>(&e)) return "Error";
  return "Exception";
}

inline int report_failure(const std::exception& e, const std::filesystem::path& out_dir) {
  const json rec = {{"error_type", error_name(e)}, {"message", e.what()}};
  std::cerr << rec.dump() << "\n";
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (!ec) {
    std::ofstream out(out_dir / "error.json");
    if (out) out << rec.dump(2) << "\n";
  }
  return 1;
}

inline std::string snapshot_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "fields_%04zu.csv", index);
  return buf;
}

inline std::vector<std::string> field_names(const SchemeSpec& s) {
  std::vector<std::string> names;
  for (int f = 0; f < s.n_fields(); ++f) names.push_back(s.field_name(f));
  return names;
}

inline void emit_plot(const std::filesystem::path& path, const FieldSlice& slice,
                      const std::vector<std::string>& names) {
  std::vector<PlotSeries> series;
  for (std::size_t f = 0; f < slice.omega.size(); ++f) {
    PlotSeries s;
    s.label = "|" + names[f] + "|";
    s.y.reserve(slice.tau.size());
    for (const Complex& v : slice.omega[f]) s.y.push_back(std::abs(v));
    series.push_back(std::move(s));
  }
  char title[96];
  std::snprintf(title, sizeof(title), "field envelopes at z = %g L_abs", slice.z);
  write_file(path, svg_line_plot(title, "tau (1/Gamma)", "amplitude (Gamma)", slice.tau, series));
}

}  // namespace detail

/// Runs the configured simulation and writes metadata, per-snapshot field
/// matrices, the diagnostics report and optional plots into out_dir.
inline int cmd_simulate(const std::filesystem::path& config_path,
                        const std::filesystem::path& out_dir, bool emit_plots = false) {
  try {
    const RunConfig cfg = load_config_file(config_path);
    RunOptions options;
    options.coupling_scale = cfg.coupling_scale;
    const SpaceTimeSolution sol = run(cfg.scheme, cfg.boundary, cfg.grid, options);
    const DiagnosticsReport report = build_report(sol, cfg.diagnostics);

    std::filesystem::create_directories(out_dir);
    const std::vector<std::string> names = detail::field_names(cfg.scheme);

    json files = json::array();
    for (std::size_t k = 0; k < sol.snapshots.size(); ++k) {
      const std::string csv = field_slice_csv(sol.snapshots[k].fields, names);
      const std::string name = detail::snapshot_name(k);
      detail::write_file(out_dir / name, csv);
      files.push_back({{"file", name}, {"z", sol.snapshots[k].z()}, {"checksum", checksum_hex(csv)}});
      if (cfg.output.emit_binary) {
        const std::string bin = field_slice_binary(sol.snapshots[k].fields);
        detail::write_file(out_dir / (name.substr(0, name.size() - 4) + ".bin"), bin);
      }
    }

    const json jrep = to_json(report);
    detail::write_file(out_dir / "diagnostics.json", jrep.dump(2) + "\n");

    json meta;
    meta["schema_version"] = kSchemaVersion;
    meta["generator"] = kGenerator;
    meta["config"] = cfg.raw;
    meta["scheme"] = {{"kind", to_string(cfg.scheme.kind)},
                      {"n_fields", cfg.scheme.n_fields()},
                      {"detunings", cfg.scheme.detunings},
                      {"gamma", cfg.scheme.gamma},
                      {"alpha", cfg.scheme.alpha},
                      {"length", cfg.scheme.length}};
    meta["warnings"] = sol.summary.warnings;
    meta["summary"] = {{"norm_violation_max", sol.summary.norm_violation_max},
                       {"max_excited_population", sol.summary.max_excited_population},
                       {"min_final_norm", sol.summary.min_final_norm}};
    meta["snapshots"] = files;
    meta["diagnostics_file"] = "diagnostics.json";
    detail::write_file(out_dir / "metadata.json", meta.dump(2) + "\n");

    if (emit_plots) {
      std::vector<double> plot_z = cfg.output.plot_z;
      if (plot_z.empty()) plot_z = {0.0, sol.snapshots.back().z()};
      for (std::size_t i = 0; i < plot_z.size(); ++i) {
        const Snapshot& snap = sol.at_z(plot_z[i]);
        char name[48];
        std::snprintf(name, sizeof(name), "plot_z%g.svg", snap.z());
        detail::emit_plot(out_dir / name, snap.fields, names);
      }
    }

    std::cout << "wrote " << sol.snapshots.size() << " snapshots to " << out_dir.string() << "\n";
    return 0;
  } catch (const std::exception& e) {
    return detail::report_failure(e, out_dir);
  }
}

/// Evaluates one of the closed-form oracles for the configured scheme.
/// which: lambda_analytic | dt_modes | dt_predict | m_velocity.
inline int cmd_oracle(const std::filesystem::path& config_path, const std::string& which,
                      const std::filesystem::path& out_dir) {
  try {
    const RunConfig cfg = load_config_file(config_path);
    std::filesystem::create_directories(out_dir);
    const double z = cfg.oracle.z.value_or(cfg.grid.z_max);

    // Full-resolution grid for the internal tables; output subsampled like a run.
    const std::size_t n_tau = static_cast<std::size_t>(
        std::llround((cfg.grid.tau_max - cfg.grid.tau_min) / cfg.grid.d_tau)) + 1;
    std::vector<double> tau_full(n_tau);
    for (std::size_t i = 0; i < n_tau; ++i)
      tau_full[i] = cfg.grid.tau_min + static_cast<double>(i) * cfg.grid.d_tau;
    const std::size_t stride = static_cast<std::size_t>(cfg.grid.tau_output_stride);

    const auto subsample = [&](FieldSlice full) {
      FieldSlice out;
      out.z = full.z;
      out.omega.resize(full.omega.size());
      for (std::size_t i = 0; i < full.tau.size(); i += stride) {
        out.tau.push_back(full.tau[i]);
        for (std::size_t f = 0; f < full.omega.size(); ++f)
          out.omega[f].push_back(full.omega[f][i]);
      }
      return out;
    };

    json meta;
    meta["schema_version"] = kSchemaVersion;
    meta["generator"] = kGenerator;
    meta["which"] = which;

    if (which == "lambda_analytic") {
      if (cfg.scheme.kind != SchemeKind::Lambda)
        throw ConfigInvalid("lambda_analytic oracle needs a lambda scheme");
      const FieldSlice slice = subsample(lambda_analytic_solution(
          cfg.boundary[0], cfg.boundary[1], cfg.scheme.detunings[1], z, tau_full));
      const std::string csv = field_slice_csv(slice, detail::field_names(cfg.scheme));
      detail::write_file(out_dir / detail::snapshot_name(0), csv);
      meta["z"] = z;
      meta["checksum"] = checksum_hex(csv);
    } else if (which == "dt_predict") {
      if (cfg.scheme.kind != SchemeKind::DoubleTripod)
        throw ConfigInvalid("dt_predict oracle needs a double_tripod scheme");
      FieldPoint bg = FieldPoint::zero(cfg.scheme);
      for (int f = 0; f < 6; ++f) bg[f] = evaluate(cfg.boundary[static_cast<std::size_t>(f)], cfg.grid.tau_min);
      bg[0] = bg[3] = 0.0;
      const FieldSlice slice =
          subsample(dt_adiabaton_predict(bg, cfg.boundary[0], cfg.boundary[3], z, tau_full));
      const std::string csv = field_slice_csv(slice, detail::field_names(cfg.scheme));
      detail::write_file(out_dir / detail::snapshot_name(0), csv);
      meta["z"] = z;
      meta["checksum"] = checksum_hex(csv);
    } else if (which == "dt_modes") {
      if (cfg.scheme.kind != SchemeKind::DoubleTripod)
        throw ConfigInvalid("dt_modes oracle needs a double_tripod scheme");
      FieldPoint bg = FieldPoint::zero(cfg.scheme);
      for (int f = 0; f < 6; ++f) bg[f] = evaluate(cfg.boundary[static_cast<std::size_t>(f)], cfg.grid.tau_min);
      bg[0] = bg[3] = 0.0;
      const VelocityOperator v = dt_velocity_matrix(bg);
      const auto [slow, fast] = dt_normal_modes(v);
      json jm;
      jm["matrix"] = {{v.m[0][0].real(), v.m[0][1].real()}, {v.m[1][0].real(), v.m[1][1].real()}};
      jm["inverse_velocities"] = {slow.inverse_velocity, fast.inverse_velocity};
      jm["v_g"] = {slow.v_g, fast.v_g};
      jm["xi"] = {slow.xi.real(), fast.xi.real()};
      meta["modes"] = jm;
      detail::write_file(out_dir / "modes.json", jm.dump(2) + "\n");
      std::cout << "v_g (slow, fast) = (" << format_double(slow.v_g) << ", "
                << format_double(fast.v_g) << ") L_abs*Gamma; xi = (" << format_double(slow.xi.real())
                << ", " << format_double(fast.xi.real()) << ")\n";
    } else if (which == "m_velocity") {
      if (cfg.scheme.kind != SchemeKind::MType)
        throw ConfigInvalid("m_velocity oracle needs an m_type scheme");
      const double b = evaluate(cfg.boundary[1], cfg.grid.tau_min);  // control amplitude
      std::string csv = "# columns,chi1_abs,omega1_total,v_g,factor_over_lambda\n";
      for (double chi : cfg.oracle.m_velocity_chi1) {
        const double total = std::abs(b) * std::sqrt(1.0 + chi * chi);
        const double vg = m_group_velocity(chi, total);
        csv += format_double(chi) + "," + format_double(total) + "," + format_double(vg) + "," +
               format_double(vg / (total * total)) + "\n";
      }
      detail::write_file(out_dir / "m_velocity.csv", csv);
      meta["checksum"] = checksum_hex(csv);
    } else {
      throw ConfigInvalid("unknown oracle '" + which + "'");
    }

    detail::write_file(out_dir / "oracle.json", meta.dump(2) + "\n");
    return 0;
  } catch (const std::exception& e) {
    return detail::report_failure(e, out_dir);
  }
}

/// Compares the field matrices of two output directories snapshot by
/// snapshot (matched on z); prints a CSV table and returns 0 iff every
/// per-field relative L2 difference stays below the tolerance.
inline int cmd_diff(const std::filesystem::path& run_dir, const std::filesystem::path& oracle_dir,
                    double tol) {
  try {
    const auto collect = [](const std::filesystem::path& dir) {
      std::vector<std::filesystem::path> files;
      if (!std::filesystem::is_directory(dir)) throw IoError(dir.string() + " is not a directory");
      for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind("fields_", 0) == 0 && name.size() > 4 &&
            name.substr(name.size() - 4) == ".csv")
          files.push_back(entry.path());
      }
      std::sort(files.begin(), files.end());
      return files;
    };

    std::vector<ParsedSlice> ref;
    for (const auto& p : collect(oracle_dir)) ref.push_back(read_field_slice_csv(p));
    std::vector<ParsedSlice> runs;
    for (const auto& p : collect(run_dir)) runs.push_back(read_field_slice_csv(p));
    if (ref.empty() || runs.empty()) throw GridMismatch("no field matrices to compare");

    bool any_pair = false;
    bool all_ok = true;
    std::cout << "z,field,rel_l2,tol,status\n";
    for (const ParsedSlice& o : ref) {
      const ParsedSlice* match = nullptr;
      for (const ParsedSlice& r : runs)
        if (std::abs(r.slice.z - o.slice.z) <= 1e-9) match = &r;
      if (!match) continue;
      any_pair = true;
      if (match->field_names != o.field_names)
        throw GridMismatch("field columns differ between the directories");
      if (match->slice.tau.size() != o.slice.tau.size())
        throw GridMismatch("tau grids differ in size");
      for (std::size_t i = 0; i < o.slice.tau.size(); ++i)
        if (std::abs(match->slice.tau[i] - o.slice.tau[i]) > 1e-9)
          throw GridMismatch("tau grids differ");

      for (std::size_t f = 0; f < o.field_names.size(); ++f) {
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < o.slice.tau.size(); ++i) {
          num += std::norm(match->slice.omega[f][i] - o.slice.omega[f][i]);
          den += std::norm(o.slice.omega[f][i]);
        }
        const double rel = den > 0.0 ? std::sqrt(num / den)
                                     : (num > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
        const bool ok = rel <= tol;
        all_ok = all_ok && ok;
        std::cout << format_double(o.slice.z) << "," << o.field_names[f] << ","
                  << format_double(rel) << "," << format_double(tol) << ","
                  << (ok ? "ok" : "exceeds") << "\n";
      }
    }
    if (!any_pair) throw GridMismatch("no snapshots share a z value");
    return all_ok ? 0 : 1;
  } catch (const std::exception& e) {
    const json rec = {{"error_type", detail::error_name(e)}, {"message", e.what()}};
    std::cerr << rec.dump() << "\n";
    return 2;
  }
}

}  // namespace adiabaton
