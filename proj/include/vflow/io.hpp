#pragma once

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "vflow/certify.hpp"
#include "vflow/scenario.hpp"

namespace vflow {

// Snapshot persistence.  Field files are binary: a 32-byte header
//   { magic "VFLW", u32 version, u32 n, u32 field count, f64 time,
//     u64 reserved }
// followed by the fields (rho, chi, ux, uy) as row-major, y-fastest f64
// arrays.  Curves and varifolds are CSV.  Every write is atomic
// (write-temp-rename) and the manifest lists each file with its FNV-1a
// hash, so a series can be audited byte for byte.

namespace detail {

inline std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MalformedTrajectory("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file_atomic(const std::string& path,
                              const std::string& bytes) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw NumericFailure("cannot write " + tmp);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  std::filesystem::rename(tmp, path);
}

inline std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

template <class T>
void append_raw(std::string& out, const T& v) {
  const char* p = reinterpret_cast<const char*>(&v);
  out.append(p, sizeof(T));
}

template <class T>
T take_raw(const std::string& in, size_t& off) {
  if (off + sizeof(T) > in.size())
    throw MalformedTrajectory("snapshot file truncated");
  T v;
  std::memcpy(&v, in.data() + off, sizeof(T));
  off += sizeof(T);
  return v;
}

}  // namespace detail

inline std::string encode_fields(const Snapshot& s) {
  const PeriodicGrid g = s.rho.grid();
  std::string out;
  out.reserve(32 + 4 * sizeof(double) * g.size());
  out.append("VFLW", 4);
  detail::append_raw(out, std::uint32_t{1});
  detail::append_raw(out, static_cast<std::uint32_t>(g.n()));
  detail::append_raw(out, std::uint32_t{4});
  detail::append_raw(out, s.time);
  detail::append_raw(out, std::uint64_t{0});
  for (const auto* f : {&s.rho, &s.chi, &s.u.x(), &s.u.y()})
    for (double v : f->values()) detail::append_raw(out, v);
  return out;
}

inline Snapshot decode_fields(const std::string& bytes) {
  size_t off = 0;
  if (bytes.size() < 32 || bytes.compare(0, 4, "VFLW") != 0)
    throw MalformedTrajectory("bad snapshot magic");
  off = 4;
  const auto version = detail::take_raw<std::uint32_t>(bytes, off);
  const auto n = detail::take_raw<std::uint32_t>(bytes, off);
  const auto nfields = detail::take_raw<std::uint32_t>(bytes, off);
  const double time = detail::take_raw<double>(bytes, off);
  detail::take_raw<std::uint64_t>(bytes, off);
  if (version != 1 || nfields != 4)
    throw MalformedTrajectory("unsupported snapshot layout");
  const PeriodicGrid g(static_cast<int>(n));
  auto field = [&] {
    std::vector<double> v(g.size());
    for (auto& x : v) x = detail::take_raw<double>(bytes, off);
    return ScalarField(g, std::move(v));
  };
  ScalarField rho = field(), chi = field(), ux = field(), uy = field();
  if (off != bytes.size())
    throw MalformedTrajectory("trailing bytes in snapshot file");
  return {time, std::move(rho), std::move(chi),
          VectorField{std::move(ux), std::move(uy)}, MarkerCurve{}};
}

inline std::string encode_curve(const MarkerCurve& c) {
  std::ostringstream out;
  out << "index,x,y\n";
  for (size_t i = 0; i < c.points.size(); ++i)
    out << i << "," << detail::fmt_double(c.points[i].x) << ","
        << detail::fmt_double(c.points[i].y) << "\n";
  return out.str();
}

inline MarkerCurve decode_curve(const std::string& bytes, double spacing) {
  std::istringstream in(bytes);
  std::string row;
  MarkerCurve c;
  c.target_spacing = spacing;
  std::getline(in, row);  // header
  while (std::getline(in, row)) {
    if (row.empty()) continue;
    for (auto& ch : row)
      if (ch == ',') ch = ' ';
    std::istringstream rs(row);
    size_t idx;
    Vec2 p;
    if (!(rs >> idx >> p.x >> p.y))
      throw MalformedTrajectory("bad curve row: " + row);
    c.points.push_back(p);
  }
  return c;
}

inline std::string encode_varifold(const DiscreteVarifold& v) {
  std::ostringstream out;
  out << "x,y,zx,zy,w\n";
  for (const auto& a : v.atoms)
    out << detail::fmt_double(a.x.x) << "," << detail::fmt_double(a.x.y) << ","
        << detail::fmt_double(a.z.x) << "," << detail::fmt_double(a.z.y) << ","
        << detail::fmt_double(a.w) << "\n";
  return out.str();
}

struct ManifestEntry {
  double time = 0;
  std::string fields_file, curve_file, varifold_file;  // names, "-" if none
  std::uint64_t fields_hash = 0, curve_hash = 0, varifold_hash = 0;
};

struct Manifest {
  std::string scenario_file = "scenario.txt";
  std::uint64_t scenario_hash = 0;
  std::vector<ManifestEntry> entries;
  double stopped_at = -1;  // >= 0 when the run ended on a topology change
};

inline std::string encode_manifest(const Manifest& m) {
  std::ostringstream out;
  out << "vflow-manifest v1\n";
  out << "scenario " << m.scenario_file << " " << detail::hex64(m.scenario_hash)
      << "\n";
  if (m.stopped_at >= 0)
    out << "stopped_at " << detail::fmt_double(m.stopped_at) << " topology\n";
  for (const auto& e : m.entries) {
    out << "snapshot " << detail::fmt_double(e.time) << " " << e.fields_file
        << " " << detail::hex64(e.fields_hash);
    if (e.curve_file.empty())
      out << " - -";
    else
      out << " " << e.curve_file << " " << detail::hex64(e.curve_hash);
    if (e.varifold_file.empty())
      out << " - -";
    else
      out << " " << e.varifold_file << " " << detail::hex64(e.varifold_hash);
    out << "\n";
  }
  return out.str();
}

inline Manifest decode_manifest(const std::string& bytes) {
  std::istringstream in(bytes);
  std::string line;
  if (!std::getline(in, line) || line != "vflow-manifest v1")
    throw MalformedTrajectory("bad manifest header");
  Manifest m;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "scenario") {
      std::string hash;
      if (!(ls >> m.scenario_file >> hash))
        throw MalformedTrajectory("bad scenario line in manifest");
      m.scenario_hash = std::stoull(hash, nullptr, 16);
    } else if (tag == "stopped_at") {
      std::string reason;
      if (!(ls >> m.stopped_at >> reason))
        throw MalformedTrajectory("bad stopped_at line in manifest");
    } else if (tag == "snapshot") {
      ManifestEntry e;
      std::string fh, ch, vh;
      if (!(ls >> e.time >> e.fields_file >> fh >> e.curve_file >> ch >>
            e.varifold_file >> vh))
        throw MalformedTrajectory("bad snapshot line in manifest");
      e.fields_hash = std::stoull(fh, nullptr, 16);
      if (e.curve_file == "-") {
        e.curve_file.clear();
      } else {
        e.curve_hash = std::stoull(ch, nullptr, 16);
      }
      if (e.varifold_file == "-") {
        e.varifold_file.clear();
      } else {
        e.varifold_hash = std::stoull(vh, nullptr, 16);
      }
      m.entries.push_back(std::move(e));
    } else {
      throw MalformedTrajectory("unknown manifest tag '" + tag + "'");
    }
  }
  return m;
}

// Incremental series writer used by the simulate command.
class SeriesWriter {
 public:
  SeriesWriter(std::string dir, const Scenario& scn) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
    const std::string text = emit_scenario(scn);
    manifest_.scenario_hash = detail::fnv1a(text);
    detail::write_file_atomic(dir_ + "/" + manifest_.scenario_file, text);
  }

  void add(const SimState& s) {
    char stem[32];
    std::snprintf(stem, sizeof stem, "snap_%04zu", manifest_.entries.size());
    ManifestEntry e;
    e.time = s.time;
    const Snapshot snap{s.time, s.rho, s.chi, s.u, s.curve};
    const std::string fields = encode_fields(snap);
    e.fields_file = std::string(stem) + ".vflw";
    e.fields_hash = detail::fnv1a(fields);
    detail::write_file_atomic(dir_ + "/" + e.fields_file, fields);
    if (s.has_curve()) {
      const std::string curve = encode_curve(s.curve);
      e.curve_file = std::string(stem) + "_curve.csv";
      e.curve_hash = detail::fnv1a(curve);
      detail::write_file_atomic(dir_ + "/" + e.curve_file, curve);
      const std::string vf = encode_varifold(varifold_from_curve(s.curve));
      e.varifold_file = std::string(stem) + "_varifold.csv";
      e.varifold_hash = detail::fnv1a(vf);
      detail::write_file_atomic(dir_ + "/" + e.varifold_file, vf);
    }
    manifest_.entries.push_back(std::move(e));
  }

  void stop_at(double time) { manifest_.stopped_at = time; }

  void finish() {
    detail::write_file_atomic(dir_ + "/manifest.txt",
                              encode_manifest(manifest_));
  }

  const Manifest& manifest() const { return manifest_; }

 private:
  std::string dir_;
  Manifest manifest_;
};

// Rebuilds an auditable in-memory trajectory from a manifest on disk,
// verifying every hash.
inline Trajectory load_trajectory(const std::string& manifest_path) {
  const std::filesystem::path mp(manifest_path);
  const std::string dir = mp.parent_path().string().empty()
                              ? "."
                              : mp.parent_path().string();
  const Manifest m = decode_manifest(detail::read_file(manifest_path));
  const std::string scen_text = detail::read_file(dir + "/" + m.scenario_file);
  if (detail::fnv1a(scen_text) != m.scenario_hash)
    throw MalformedTrajectory("scenario hash mismatch");
  Scenario scn;
  try {
    scn = parse_scenario(scen_text);
  } catch (const ParseError& e) {
    throw MalformedTrajectory(std::string("stored scenario invalid: ") +
                              e.what());
  }
  Trajectory traj;
  traj.cfg = scn.cfg;
  traj.mat = scenario_materials(scn);
  traj.rho_lo = scn.rho_lo;
  traj.rho_hi = scn.rho_hi;
  for (const auto& e : m.entries) {
    const std::string fields = detail::read_file(dir + "/" + e.fields_file);
    if (detail::fnv1a(fields) != e.fields_hash)
      throw MalformedTrajectory("hash mismatch for " + e.fields_file);
    Snapshot snap = decode_fields(fields);
    if (snap.time != e.time)
      throw MalformedTrajectory("time mismatch for " + e.fields_file);
    if (!e.curve_file.empty()) {
      const std::string curve = detail::read_file(dir + "/" + e.curve_file);
      if (detail::fnv1a(curve) != e.curve_hash)
        throw MalformedTrajectory("hash mismatch for " + e.curve_file);
      snap.curve = decode_curve(curve, 1.0 / scn.n);
    }
    traj.snaps.push_back(std::move(snap));
  }
  traj.validate();
  return traj;
}

// Diagnostics CSV, one row appended per step.
inline std::string diagnostics_header() {
  return "time,kinetic,internal,interface,dissipated_cum,hyper_cum,"
         "balance_residual,mass,max_div_u,min_rho,max_rho,perimeter\n";
}

inline std::string diagnostics_row(const SimState& s, const Materials& mat,
                                   const StepConfig& cfg) {
  const EnergyReport rep = energy_report(s, mat, cfg);
  const PeriodicGrid g = s.rho.grid();
  double mass = 0, rmin = kInf, rmax = -kInf, dmax = 0;
  for (double r : s.rho.values()) {
    mass += r;
    rmin = std::min(rmin, r);
    rmax = std::max(rmax, r);
  }
  mass *= g.h() * g.h();
  for (double v : divergence(s.u).values()) dmax = std::max(dmax, std::abs(v));
  using detail::fmt_double;
  std::ostringstream out;
  out << fmt_double(s.time) << "," << fmt_double(rep.ledger.kinetic) << ","
      << fmt_double(rep.ledger.internal) << ","
      << fmt_double(rep.ledger.interface) << ","
      << fmt_double(rep.ledger.dissipated_cum) << ","
      << fmt_double(rep.ledger.hyper_cum) << ","
      << fmt_double(rep.balance_residual) << "," << fmt_double(mass) << ","
      << fmt_double(dmax) << "," << fmt_double(rmin) << "," << fmt_double(rmax)
      << "," << fmt_double(s.has_curve() ? perimeter(s.curve) : 0.0) << "\n";
  return out.str();
}

// Certification report serialization.
inline std::string encode_report_csv(const ResidualReport& rep) {
  std::ostringstream out;
  out << "clause,test_id,tau,residual,tol,pass\n";
  for (const auto& r : rep.rows)
    out << r.clause << "," << r.test_id << "," << detail::fmt_double(r.tau)
        << "," << detail::fmt_double(r.residual) << ","
        << detail::fmt_double(r.tol) << "," << (r.pass ? 1 : 0) << "\n";
  return out.str();
}

inline std::string encode_report_text(const ResidualReport& rep) {
  std::ostringstream out;
  out << "certification " << (rep.verdict ? "PASS" : "FAIL") << "\n";
  out << "tolerance constants: transport " << detail::fmt_double(rep.c_transport)
      << ", mass " << detail::fmt_double(rep.c_mass) << ", momentum "
      << detail::fmt_double(rep.c_momentum) << " (tol = C * (h + dt))\n";
  for (const std::string clause :
       {"transport", "mass", "momentum_energy", "compatibility", "bounds"}) {
    int total = 0, failed = 0;
    double worst = 0;
    for (const auto& r : rep.rows) {
      if (r.clause != clause) continue;
      ++total;
      if (!r.pass) ++failed;
      worst = std::max(worst, std::abs(r.residual));
    }
    if (total == 0) continue;
    out << "[" << clause << "] checks " << total << ", failed " << failed
        << ", worst |residual| " << detail::fmt_double(worst) << "\n";
    for (const auto& r : rep.rows)
      if (r.clause == clause && !r.pass)
        out << "  FAIL test " << r.test_id << " tau "
            << detail::fmt_double(r.tau) << " residual "
            << detail::fmt_double(r.residual) << " tol "
            << detail::fmt_double(r.tol) << "\n";
  }
  return out.str();
}

}  // namespace vflow
