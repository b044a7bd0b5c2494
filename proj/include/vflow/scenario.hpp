#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "vflow/dynamics.hpp"

namespace vflow {

// Archivable run description: a flat key = value text format with '#'
// comments.  Parsing validates everything it can see (parameter ranges,
// interface simplicity, initial density inside [rho_lo, rho_hi]); the
// emitter is canonical, so parse(emit(s)) reproduces s exactly.

struct Scenario {
  struct Mode {
    int kx = 0, ky = 0;
    double c = 0, s = 0;  // c cos(2 pi k.x) + s sin(2 pi k.x)
  };
  enum class Shape { none, circle, ellipse, polygon };

  int n = 64;
  StepConfig cfg;
  bool delta_auto = true;  // delta defaults to 0 until overridden
  PotentialPtr f1 = DissipationPotential::quadratic(0.1, 0.0);
  PotentialPtr f2 = DissipationPotential::quadratic(0.1, 0.0);
  double comparability_k = 0;
  PressurePtr p1 = PressureLaw::isothermal(1.0);
  PressurePtr p2 = PressureLaw::isothermal(1.0);
  std::string table_file1, table_file2;  // set when a pressure is tabulated

  double rho_constant = 1.0;
  std::vector<Mode> rho_modes;
  Vec2 u_constant{0, 0};
  std::vector<Mode> ux_modes, uy_modes;

  Shape shape = Shape::none;
  Vec2 center{0.5, 0.5};
  double radius = 0.25, radius_x = 0.25, radius_y = 0.25;
  std::vector<Vec2> polygon;
  int markers = 256;

  double rho_lo = 0.5, rho_hi = 2.0;
  int snapshot_every = 10;
  std::uint64_t seed = 1;
};

namespace detail {

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// name{key=value, ...} parser for potential / pressure / interface specs.
struct SpecNode {
  std::string name;
  std::map<std::string, std::string> args;  // nested specs kept verbatim
};

inline SpecNode parse_spec(const std::string& text, int line) {
  SpecNode node;
  size_t i = 0;
  while (i < text.size() && (std::isalnum(text[i]) || text[i] == '_'))
    node.name += text[i++];
  if (node.name.empty()) throw ParseError(line, "expected a spec name");
  while (i < text.size() && std::isspace(text[i])) ++i;
  if (i == text.size()) return node;  // bare name (e.g. "none")
  if (text[i] != '{') throw ParseError(line, "expected '{' after spec name");
  ++i;
  while (true) {
    while (i < text.size() && (std::isspace(text[i]) || text[i] == ','))
      ++i;
    if (i >= text.size()) throw ParseError(line, "unterminated spec");
    if (text[i] == '}') {
      ++i;
      break;
    }
    std::string key;
    while (i < text.size() && (std::isalnum(text[i]) || text[i] == '_'))
      key += text[i++];
    while (i < text.size() && std::isspace(text[i])) ++i;
    if (key.empty() || i >= text.size() || text[i] != '=')
      throw ParseError(line, "expected key=value inside spec braces");
    ++i;
    while (i < text.size() && std::isspace(text[i])) ++i;
    std::string val;
    int depth = 0;
    while (i < text.size() && (depth > 0 || (text[i] != ',' && text[i] != '}'))) {
      if (text[i] == '{') ++depth;
      if (text[i] == '}') --depth;
      val += text[i++];
    }
    while (!val.empty() && std::isspace(val.back())) val.pop_back();
    node.args[key] = val;
  }
  while (i < text.size() && std::isspace(text[i])) ++i;
  if (i != text.size()) throw ParseError(line, "trailing characters after spec");
  return node;
}

inline double spec_number(const SpecNode& node, const std::string& key,
                          int line) {
  auto it = node.args.find(key);
  if (it == node.args.end())
    throw ParseError(line, node.name + " needs '" + key + "'");
  size_t used = 0;
  double v;
  try {
    v = std::stod(it->second, &used);
  } catch (const std::exception&) {
    throw ParseError(line, "bad number for '" + key + "'");
  }
  if (used != it->second.size())
    throw ParseError(line, "bad number for '" + key + "'");
  return v;
}

inline void reject_unknown(const SpecNode& node,
                           std::vector<std::string> known, int line) {
  for (const auto& [k, v] : node.args) {
    bool ok = false;
    for (const auto& a : known) ok = ok || a == k;
    if (!ok) throw ParseError(line, "unknown key '" + k + "' in " + node.name);
  }
}

inline PotentialPtr parse_potential(const std::string& text, int line) {
  const SpecNode node = parse_spec(text, line);
  try {
    if (node.name == "quadratic") {
      reject_unknown(node, {"mu", "lambda"}, line);
      return DissipationPotential::quadratic(spec_number(node, "mu", line),
                                             spec_number(node, "lambda", line));
    }
    if (node.name == "power") {
      reject_unknown(node, {"mu", "alpha", "trace_coef"}, line);
      const double tc = node.args.count("trace_coef")
                            ? spec_number(node, "trace_coef", line)
                            : 0.0;
      return DissipationPotential::power_law(spec_number(node, "mu", line),
                                             spec_number(node, "alpha", line),
                                             tc);
    }
    if (node.name == "trace_bounded") {
      reject_unknown(node, {"dbar", "inner"}, line);
      auto inner = node.args.find("inner");
      if (inner == node.args.end())
        throw ParseError(line, "trace_bounded needs 'inner'");
      return DissipationPotential::trace_bounded(
          parse_potential(inner->second, line),
          spec_number(node, "dbar", line));
    }
    if (node.name == "dev_cap") {
      reject_unknown(node, {"radius", "inner"}, line);
      auto inner = node.args.find("inner");
      if (inner == node.args.end())
        throw ParseError(line, "dev_cap needs 'inner'");
      return DissipationPotential::deviatoric_cap(
          parse_potential(inner->second, line),
          spec_number(node, "radius", line));
    }
  } catch (const NumericFailure& e) {
    throw ParseError(line, e.what());
  }
  throw ParseError(line, "unknown potential family '" + node.name + "'");
}

inline std::string emit_potential(const DissipationPotential& f) {
  if (const auto* q = std::get_if<Quadratic>(&f.family))
    return "quadratic{mu=" + fmt_double(q->mu) +
           ", lambda=" + fmt_double(q->lambda) + "}";
  if (const auto* p = std::get_if<PowerLaw>(&f.family))
    return "power{mu=" + fmt_double(p->mu) + ", alpha=" + fmt_double(p->alpha) +
           ", trace_coef=" + fmt_double(p->trace_coef) + "}";
  if (const auto* t = std::get_if<TraceBounded>(&f.family))
    return "trace_bounded{dbar=" + fmt_double(t->dbar) +
           ", inner=" + emit_potential(*t->inner) + "}";
  const auto& d = std::get<DeviatoricCap>(f.family);
  return "dev_cap{radius=" + fmt_double(d.radius) +
         ", inner=" + emit_potential(*d.inner) + "}";
}

inline PressurePtr parse_pressure(const std::string& text, int line,
                                  std::string* table_file) {
  const SpecNode node = parse_spec(text, line);
  try {
    if (node.name == "isothermal") {
      reject_unknown(node, {"a"}, line);
      table_file->clear();
      return PressureLaw::isothermal(spec_number(node, "a", line));
    }
    if (node.name == "table") {
      reject_unknown(node, {"file"}, line);
      auto it = node.args.find("file");
      if (it == node.args.end()) throw ParseError(line, "table needs 'file'");
      std::ifstream in(it->second);
      if (!in) throw ParseError(line, "cannot open table file " + it->second);
      std::vector<double> rho, p;
      std::string row;
      while (std::getline(in, row)) {
        if (row.empty()) continue;
        for (auto& ch : row)
          if (ch == ',') ch = ' ';
        std::istringstream rs(row);
        double a, b;
        if (!(rs >> a >> b))
          throw ParseError(line, "bad row in table file " + it->second);
        rho.push_back(a);
        p.push_back(b);
      }
      *table_file = it->second;
      return PressureLaw::tabulated(std::move(rho), std::move(p));
    }
  } catch (const NumericFailure& e) {
    throw ParseError(line, e.what());
  }
  throw ParseError(line, "unknown pressure law '" + node.name + "'");
}

inline Scenario::Mode parse_mode(const std::string& text, int line) {
  std::istringstream in(text);
  Scenario::Mode m;
  if (!(in >> m.kx >> m.ky >> m.c >> m.s))
    throw ParseError(line, "mode needs: kx ky cos_amp sin_amp");
  std::string rest;
  if (in >> rest) throw ParseError(line, "trailing data after mode");
  return m;
}

}  // namespace detail

inline MarkerCurve scenario_curve(const Scenario& s) {
  MarkerCurve c;
  const double spacing_hint = 1.0 / s.n;
  switch (s.shape) {
    case Scenario::Shape::none:
      return c;
    case Scenario::Shape::circle:
      return MarkerCurve::circle(s.center, s.radius, s.markers, spacing_hint);
    case Scenario::Shape::ellipse: {
      c.target_spacing = spacing_hint;
      c.points.reserve(s.markers);
      for (int i = 0; i < s.markers; ++i) {
        const double a = 2.0 * M_PI * i / s.markers;
        c.points.push_back({s.center.x + s.radius_x * std::cos(a),
                            s.center.y + s.radius_y * std::sin(a)});
      }
      return resample(c);
    }
    case Scenario::Shape::polygon:
      c.target_spacing = spacing_hint;
      c.points = s.polygon;
      return resample(c);
  }
  return c;
}

inline Scenario parse_scenario(const std::string& text) {
  Scenario s;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  std::vector<std::pair<int, std::pair<std::string, std::string>>> pairs;
  while (std::getline(in, raw)) {
    ++lineno;
    const size_t hash = raw.find('#');
    std::string line = hash == std::string::npos ? raw : raw.substr(0, hash);
    size_t a = line.find_first_not_of(" \t\r");
    if (a == std::string::npos) continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(lineno, "expected key = value");
    // For spec values ('=' inside braces) the key ends at the first '='
    // outside braces; keys never contain '{'.
    size_t brace = line.find('{');
    if (brace != std::string::npos && brace < eq)
      throw ParseError(lineno, "expected key = value");
    std::string key = line.substr(a, eq - a);
    while (!key.empty() && std::isspace(key.back())) key.pop_back();
    std::string val = line.substr(eq + 1);
    size_t b = val.find_first_not_of(" \t");
    val = b == std::string::npos ? "" : val.substr(b);
    while (!val.empty() && std::isspace(val.back())) val.pop_back();
    if (val.empty()) throw ParseError(lineno, "missing value for " + key);
    pairs.push_back({lineno, {key, val}});
  }

  auto number = [](const std::string& v, int ln) {
    size_t used = 0;
    double x;
    try {
      x = std::stod(v, &used);
    } catch (const std::exception&) {
      throw ParseError(ln, "bad number '" + v + "'");
    }
    if (used != v.size()) throw ParseError(ln, "bad number '" + v + "'");
    return x;
  };
  auto integer = [&](const std::string& v, int ln) {
    const double x = number(v, ln);
    if (x != std::floor(x)) throw ParseError(ln, "expected an integer");
    return static_cast<long long>(x);
  };

  for (const auto& [ln, kv] : pairs) {
    const std::string& key = kv.first;
    const std::string& val = kv.second;
    if (key == "grid.n") {
      s.n = static_cast<int>(integer(val, ln));
    } else if (key == "step.dt") {
      s.cfg.dt = number(val, ln);
    } else if (key == "step.N") {
      s.cfg.N = static_cast<int>(integer(val, ln));
    } else if (key == "step.eps") {
      s.cfg.eps = number(val, ln);
    } else if (key == "step.delta") {
      if (val == "auto") {
        s.delta_auto = true;
        s.cfg.delta = 0;
      } else {
        s.delta_auto = false;
        s.cfg.delta = number(val, ln);
      }
    } else if (key == "step.m") {
      s.cfg.m = static_cast<int>(integer(val, ln));
    } else if (key == "step.kappa") {
      s.cfg.kappa = number(val, ln);
    } else if (key == "step.t_end") {
      s.cfg.t_end = number(val, ln);
    } else if (key == "potential.phase1") {
      s.f1 = detail::parse_potential(val, ln);
    } else if (key == "potential.phase2") {
      s.f2 = detail::parse_potential(val, ln);
    } else if (key == "potential.comparability_k") {
      s.comparability_k = number(val, ln);
    } else if (key == "pressure.phase1") {
      s.p1 = detail::parse_pressure(val, ln, &s.table_file1);
    } else if (key == "pressure.phase2") {
      s.p2 = detail::parse_pressure(val, ln, &s.table_file2);
    } else if (key == "rho.constant") {
      s.rho_constant = number(val, ln);
    } else if (key == "rho.mode") {
      s.rho_modes.push_back(detail::parse_mode(val, ln));
    } else if (key == "u.constant") {
      std::istringstream uv(val);
      if (!(uv >> s.u_constant.x >> s.u_constant.y))
        throw ParseError(ln, "u.constant needs two numbers");
    } else if (key == "u.mode_x") {
      s.ux_modes.push_back(detail::parse_mode(val, ln));
    } else if (key == "u.mode_y") {
      s.uy_modes.push_back(detail::parse_mode(val, ln));
    } else if (key == "interface.shape") {
      const detail::SpecNode node = detail::parse_spec(val, ln);
      if (node.name == "none") {
        s.shape = Scenario::Shape::none;
      } else if (node.name == "circle") {
        detail::reject_unknown(node, {"cx", "cy", "r"}, ln);
        s.shape = Scenario::Shape::circle;
        s.center = {detail::spec_number(node, "cx", ln),
                    detail::spec_number(node, "cy", ln)};
        s.radius = detail::spec_number(node, "r", ln);
        if (!(s.radius > 0)) throw ParseError(ln, "circle radius must be > 0");
      } else if (node.name == "ellipse") {
        detail::reject_unknown(node, {"cx", "cy", "rx", "ry"}, ln);
        s.shape = Scenario::Shape::ellipse;
        s.center = {detail::spec_number(node, "cx", ln),
                    detail::spec_number(node, "cy", ln)};
        s.radius_x = detail::spec_number(node, "rx", ln);
        s.radius_y = detail::spec_number(node, "ry", ln);
        if (!(s.radius_x > 0) || !(s.radius_y > 0))
          throw ParseError(ln, "ellipse radii must be > 0");
      } else if (node.name == "polygon") {
        detail::reject_unknown(node, {"points"}, ln);
        auto it = node.args.find("points");
        if (it == node.args.end())
          throw ParseError(ln, "polygon needs 'points'");
        std::istringstream pv(it->second);
        double x, y;
        s.polygon.clear();
        while (pv >> x >> y) s.polygon.push_back({x, y});
        if (s.polygon.size() < 3)
          throw ParseError(ln, "polygon needs at least 3 points");
        s.shape = Scenario::Shape::polygon;
        MarkerCurve probe;
        probe.points = s.polygon;
        if (!detail::curve_simple(probe))
          throw ParseError(ln, "polygon self-intersects");
        if (signed_area(probe) <= 0)
          throw ParseError(ln, "polygon must wind counterclockwise");
      } else {
        throw ParseError(ln, "unknown interface shape '" + node.name + "'");
      }
    } else if (key == "interface.markers") {
      s.markers = static_cast<int>(integer(val, ln));
      if (s.markers < 16) throw ParseError(ln, "need at least 16 markers");
    } else if (key == "bounds.rho_lo") {
      s.rho_lo = number(val, ln);
    } else if (key == "bounds.rho_hi") {
      s.rho_hi = number(val, ln);
    } else if (key == "output.snapshot_every") {
      s.snapshot_every = static_cast<int>(integer(val, ln));
      if (s.snapshot_every < 1)
        throw ParseError(ln, "snapshot_every must be >= 1");
    } else if (key == "seed") {
      s.seed = static_cast<std::uint64_t>(integer(val, ln));
    } else {
      throw ParseError(ln, "unknown key '" + key + "'");
    }
  }

  // Cross-field validation.
  if (s.n < 16 || (s.n & (s.n - 1)) != 0)
    throw ParseError(0, "grid.n must be a power of two >= 16");
  if (!(s.cfg.dt > 0) || !(s.cfg.t_end > 0))
    throw ParseError(0, "step.dt and step.t_end must be > 0");
  if (!(s.rho_lo > 0) || !(s.rho_hi >= s.rho_lo))
    throw ParseError(0, "need 0 < rho_lo <= rho_hi");
  double amp = 0;
  for (const auto& m : s.rho_modes) amp += std::abs(m.c) + std::abs(m.s);
  if (s.rho_constant - amp < s.rho_lo || s.rho_constant + amp > s.rho_hi)
    throw ParseError(0, "initial density can leave [rho_lo, rho_hi]");
  return s;
}

inline std::string emit_scenario(const Scenario& s) {
  using detail::fmt_double;
  std::ostringstream out;
  auto mode_line = [&](const char* key, const Scenario::Mode& m) {
    out << key << " = " << m.kx << " " << m.ky << " " << fmt_double(m.c)
        << " " << fmt_double(m.s) << "\n";
  };
  out << "grid.n = " << s.n << "\n";
  out << "step.dt = " << fmt_double(s.cfg.dt) << "\n";
  out << "step.N = " << s.cfg.N << "\n";
  out << "step.eps = " << fmt_double(s.cfg.eps) << "\n";
  if (s.delta_auto)
    out << "step.delta = auto\n";
  else
    out << "step.delta = " << fmt_double(s.cfg.delta) << "\n";
  out << "step.m = " << s.cfg.m << "\n";
  out << "step.kappa = " << fmt_double(s.cfg.kappa) << "\n";
  out << "step.t_end = " << fmt_double(s.cfg.t_end) << "\n";
  out << "potential.phase1 = " << detail::emit_potential(*s.f1) << "\n";
  out << "potential.phase2 = " << detail::emit_potential(*s.f2) << "\n";
  if (s.comparability_k != 0)
    out << "potential.comparability_k = " << fmt_double(s.comparability_k)
        << "\n";
  auto pressure_line = [&](const char* key, const PressureLaw& p,
                           const std::string& file) {
    if (const auto* iso = std::get_if<Isothermal>(&p.family))
      out << key << " = isothermal{a=" << fmt_double(iso->a) << "}\n";
    else
      out << key << " = table{file=" << file << "}\n";
  };
  pressure_line("pressure.phase1", *s.p1, s.table_file1);
  pressure_line("pressure.phase2", *s.p2, s.table_file2);
  out << "rho.constant = " << fmt_double(s.rho_constant) << "\n";
  for (const auto& m : s.rho_modes) mode_line("rho.mode", m);
  out << "u.constant = " << fmt_double(s.u_constant.x) << " "
      << fmt_double(s.u_constant.y) << "\n";
  for (const auto& m : s.ux_modes) mode_line("u.mode_x", m);
  for (const auto& m : s.uy_modes) mode_line("u.mode_y", m);
  switch (s.shape) {
    case Scenario::Shape::none:
      out << "interface.shape = none\n";
      break;
    case Scenario::Shape::circle:
      out << "interface.shape = circle{cx=" << fmt_double(s.center.x)
          << ", cy=" << fmt_double(s.center.y)
          << ", r=" << fmt_double(s.radius) << "}\n";
      break;
    case Scenario::Shape::ellipse:
      out << "interface.shape = ellipse{cx=" << fmt_double(s.center.x)
          << ", cy=" << fmt_double(s.center.y)
          << ", rx=" << fmt_double(s.radius_x)
          << ", ry=" << fmt_double(s.radius_y) << "}\n";
      break;
    case Scenario::Shape::polygon: {
      out << "interface.shape = polygon{points=";
      for (size_t i = 0; i < s.polygon.size(); ++i)
        out << (i ? " " : "") << fmt_double(s.polygon[i].x) << " "
            << fmt_double(s.polygon[i].y);
      out << "}\n";
      break;
    }
  }
  out << "interface.markers = " << s.markers << "\n";
  out << "bounds.rho_lo = " << fmt_double(s.rho_lo) << "\n";
  out << "bounds.rho_hi = " << fmt_double(s.rho_hi) << "\n";
  out << "output.snapshot_every = " << s.snapshot_every << "\n";
  out << "seed = " << s.seed << "\n";
  return out.str();
}

inline Materials scenario_materials(const Scenario& s) {
  return {MixturePotential{s.f1, s.f2, s.comparability_k},
          MixturePressure{s.p1, s.p2}};
}

inline SimState scenario_state(const Scenario& s) {
  const PeriodicGrid g(s.n);
  auto rho = ScalarField::from_function(g, [&](Vec2 p) {
    double v = s.rho_constant;
    for (const auto& m : s.rho_modes) {
      const double ph = 2.0 * M_PI * (m.kx * p.x + m.ky * p.y);
      v += m.c * std::cos(ph) + m.s * std::sin(ph);
    }
    return v;
  });
  auto u = VectorField::from_function(g, [&](Vec2 p) {
    Vec2 v = s.u_constant;
    for (const auto& m : s.ux_modes) {
      const double ph = 2.0 * M_PI * (m.kx * p.x + m.ky * p.y);
      v.x += m.c * std::cos(ph) + m.s * std::sin(ph);
    }
    for (const auto& m : s.uy_modes) {
      const double ph = 2.0 * M_PI * (m.kx * p.x + m.ky * p.y);
      v.y += m.c * std::cos(ph) + m.s * std::sin(ph);
    }
    return v;
  });
  return make_state(std::move(rho), std::move(u), scenario_curve(s),
                    ScalarField(g, 1.0), scenario_materials(s), s.cfg);
}

}  // namespace vflow
