// Copyright 2026 The mfsir Authors
// SPDX-License-Identifier: Apache-2.0

#include "mfsir/config_io.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstring>
#include <ctime>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include <openssl/evp.h>

#include "mfsir/error.hpp"

#ifndef MFSIR_VERSION
#define MFSIR_VERSION "0.0.0"
#endif

namespace mfsir {
namespace {

using nlohmann::json;

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

// Object reader that remembers which keys were consumed.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_, "must be an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json* child(const std::string& key) {
    if (!j_.contains(key)) return nullptr;
    seen_.insert(key);
    return &j_.at(key);
  }

  double number(const std::string& key, double def) {
    const json* v = child(key);
    if (v == nullptr) return def;
    if (!v->is_number()) throw ConfigError(join(path_, key), "must be a number");
    return v->get<double>();
  }

  std::int64_t integer(const std::string& key, std::int64_t def) {
    const json* v = child(key);
    if (v == nullptr) return def;
    if (!v->is_number_integer()) throw ConfigError(join(path_, key), "must be an integer");
    return v->get<std::int64_t>();
  }

  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t def) {
    const json* v = child(key);
    if (v == nullptr) return def;
    if (!v->is_number_unsigned()) {
      throw ConfigError(join(path_, key), "must be a non-negative integer");
    }
    return v->get<std::uint64_t>();
  }

  bool boolean(const std::string& key, bool def) {
    const json* v = child(key);
    if (v == nullptr) return def;
    if (!v->is_boolean()) throw ConfigError(join(path_, key), "must be true or false");
    return v->get<bool>();
  }

  std::string string(const std::string& key, const std::string& def) {
    const json* v = child(key);
    if (v == nullptr) return def;
    if (!v->is_string()) throw ConfigError(join(path_, key), "must be a string");
    return v->get<std::string>();
  }

  std::vector<double> numbers(const std::string& key, std::vector<double> def) {
    const json* v = child(key);
    if (v == nullptr) return def;
    return number_list(*v, join(path_, key));
  }

  std::array<double, 3> triple(const std::string& key, std::array<double, 3> def) {
    const json* v = child(key);
    if (v == nullptr) return def;
    if (v->is_number()) {
      const double x = v->get<double>();
      return {x, x, x};
    }
    const std::vector<double> xs = number_list(*v, join(path_, key));
    if (xs.size() != 3) throw ConfigError(join(path_, key), "needs one value per state (3)");
    return {xs[0], xs[1], xs[2]};
  }

  std::string path(const std::string& key) const { return join(path_, key); }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError(join(path_, it.key()), "unknown key");
    }
  }

  static std::vector<double> number_list(const json& v, const std::string& path) {
    if (!v.is_array()) throw ConfigError(path, "must be an array of numbers");
    std::vector<double> out;
    for (const auto& x : v) {
      if (x.is_array()) {
        for (const auto& y : x) {
          if (!y.is_number()) throw ConfigError(path, "must contain numbers");
          out.push_back(y.get<double>());
        }
      } else {
        if (!x.is_number()) throw ConfigError(path, "must contain numbers");
        out.push_back(x.get<double>());
      }
    }
    return out;
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

KernelSpec parse_kernel(Section s) {
  const std::string family = s.string("family", "constant");
  KernelSpec k;
  if (family == "constant") {
    k = KernelSpec::constant(s.number("beta", 0.0));
  } else if (family == "gaussian") {
    k = KernelSpec::gaussian(s.number("beta", 1.0), s.number("length", 1.0));
  } else if (family == "bump") {
    k = KernelSpec::bump(s.number("beta", 1.0), s.number("radius", 1.0));
  } else {
    throw ConfigError(s.path("family"), "unknown family '" + family + "'");
  }
  s.finish();
  k.validate();
  return k;
}

DriftSpec parse_drift(Section s) {
  const std::string family = s.string("family", "zero");
  DriftSpec d;
  if (family == "zero") {
    d = DriftSpec::zero();
  } else if (family == "saturating_attraction") {
    d = DriftSpec::saturating_attraction(s.number("speed", 0.0), s.number("length", 1.0));
  } else if (family == "state_modulated") {
    const double speed = s.number("speed", 0.0);
    const double length = s.number("length", 1.0);
    const std::vector<double> w = s.numbers("weights", std::vector<double>(9, 1.0));
    if (w.size() != 9) throw ConfigError(s.path("weights"), "must be a 3x3 matrix");
    std::array<std::array<double, 3>, 3> m{};
    for (std::size_t i = 0; i < 9; ++i) m[i / 3][i % 3] = w[i];
    d = DriftSpec::state_modulated(speed, length, m);
  } else {
    throw ConfigError(s.path("family"), "unknown family '" + family + "'");
  }
  s.finish();
  d.validate();
  return d;
}

DiffusionSpec parse_diffusion(Section s) {
  const std::string family = s.string("family", "constant");
  DiffusionSpec d;
  if (family == "constant") {
    d = DiffusionSpec::constant(s.triple("sigma", {0.0, 0.0, 0.0}));
  } else if (family == "smooth_bounded") {
    d = DiffusionSpec::smooth_bounded(s.triple("base", {0.0, 0.0, 0.0}),
                                      s.triple("amplitude", {0.0, 0.0, 0.0}),
                                      s.triple("length", {1.0, 1.0, 1.0}));
  } else {
    throw ConfigError(s.path("family"), "unknown family '" + family + "'");
  }
  s.finish();
  d.validate();
  return d;
}

InitialLawSpec parse_initial(Section s, int dim) {
  std::array<double, 3> probs = s.triple("state_probabilities", {1.0, 0.0, 0.0});
  InitialLawSpec law = InitialLawSpec::standard(dim, probs);
  if (const json* sp = s.child("spatial")) {
    Section spatial(*sp, s.path("spatial"));
    for (EpidemicState e : kStates) {
      const std::string key(to_string(e));
      const json* comps = spatial.child(key);
      if (comps == nullptr) continue;
      const std::string path = spatial.path(key);
      if (!comps->is_array()) throw ConfigError(path, "must be an array of components");
      std::vector<GaussianComponent> mix;
      for (std::size_t c = 0; c < comps->size(); ++c) {
        Section comp((*comps)[c], path + "[" + std::to_string(c) + "]");
        GaussianComponent g;
        g.weight = comp.number("weight", 1.0);
        g.mean = comp.numbers("mean", std::vector<double>(static_cast<std::size_t>(dim), 0.0));
        std::vector<double> eye(static_cast<std::size_t>(dim * dim), 0.0);
        for (int k = 0; k < dim; ++k) eye[static_cast<std::size_t>(k * dim + k)] = 1.0;
        g.covariance = comp.numbers("covariance", eye);
        comp.finish();
        mix.push_back(std::move(g));
      }
      law.spatial[code(e)] = std::move(mix);
    }
    spatial.finish();
  }
  s.finish();
  law.validate(dim);
  return law;
}

json component_json(const GaussianComponent& g) {
  return json{{"weight", g.weight}, {"mean", g.mean}, {"covariance", g.covariance}};
}

std::string kernel_family(KernelSpec::Family f) {
  switch (f) {
    case KernelSpec::Family::constant: return "constant";
    case KernelSpec::Family::gaussian: return "gaussian";
    case KernelSpec::Family::bump: return "bump";
  }
  return "constant";
}

std::string drift_family(DriftSpec::Family f) {
  switch (f) {
    case DriftSpec::Family::zero: return "zero";
    case DriftSpec::Family::saturating_attraction: return "saturating_attraction";
    case DriftSpec::Family::state_modulated: return "state_modulated";
  }
  return "zero";
}

std::string hex(const unsigned char* data, unsigned len) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned i = 0; i < len; ++i) {
    out.push_back(digits[data[i] >> 4]);
    out.push_back(digits[data[i] & 15]);
  }
  return out;
}

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new()) {
    if (ctx_ == nullptr || EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr) != 1) {
      throw std::runtime_error("sha256: digest initialisation failed");
    }
  }
  ~Sha256() { EVP_MD_CTX_free(ctx_); }
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  void update(const void* data, std::size_t len) { EVP_DigestUpdate(ctx_, data, len); }
  std::string hex_digest() {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned len = 0;
    EVP_DigestFinal_ex(ctx_, md, &len);
    return hex(md, len);
  }

 private:
  EVP_MD_CTX* ctx_;
};

const char* state_name(EpidemicState e) {
  return e == EpidemicState::S ? "S" : e == EpidemicState::I ? "I" : "R";
}

constexpr char kCacheMagic[8] = {'M', 'F', 'S', 'I', 'R', 'D', 'C', '1'};

template <class T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
bool get(std::istream& is, T& v) {
  return static_cast<bool>(is.read(reinterpret_cast<char*>(&v), sizeof(T)));
}

}  // namespace

std::vector<double> RunConfig::checkpoints() const {
  if (!experiment.checkpoints.empty()) return experiment.checkpoints;
  return {0.0, 0.25 * final_time, 0.5 * final_time, 0.75 * final_time, final_time};
}

std::vector<TestFunction> RunConfig::bank() const {
  const std::vector<TestFunction> all = standard_bank();
  std::vector<TestFunction> out;
  for (std::size_t k : experiment.bank) out.push_back(all.at(k));
  return out;
}

RunConfig parse_config(const json& doc) {
  Section root(doc, "");
  RunConfig rc;
  ModelConfig& m = rc.model;
  m.dim = static_cast<int>(root.integer("dimension", 1));
  if (m.dim < 1) throw ConfigError("dimension", "must be >= 1");
  m.gamma = root.number("gamma", 0.0);
  if (const json* k = root.child("kernel")) m.kernel = parse_kernel(Section(*k, "kernel"));
  if (const json* d = root.child("drift")) m.drift = parse_drift(Section(*d, "drift"));
  if (const json* d = root.child("diffusion")) {
    m.diffusion = parse_diffusion(Section(*d, "diffusion"));
  }
  if (const json* i = root.child("initial")) {
    m.initial = parse_initial(Section(*i, "initial"), m.dim);
  } else {
    m.initial = InitialLawSpec::standard(m.dim, {1.0, 0.0, 0.0});
  }
  m.validate();

  if (const json* sim = root.child("simulation")) {
    Section s(*sim, "simulation");
    const std::string mode = s.string("mode", "split_step");
    if (mode == "split_step") {
      rc.scheme.mode = JumpMode::split_step;
    } else if (mode == "thinning") {
      rc.scheme.mode = JumpMode::thinning;
    } else {
      throw ConfigError("simulation.mode", "must be split_step or thinning");
    }
    rc.scheme.dt = s.number("dt", rc.scheme.dt);
    rc.final_time = s.number("final_time", rc.final_time);
    rc.scheme.cell_list = s.boolean("cell_list", false);
    s.finish();
  }
  if (!(rc.final_time > 0.0)) throw ConfigError("simulation.final_time", "must be > 0");
  rc.scheme.snapshot_times = {rc.final_time};
  rc.scheme.validate();

  ExperimentParams& x = rc.experiment;
  if (const json* ex = root.child("experiment")) {
    Section s(*ex, "experiment");
    x.seed = s.unsigned_integer("seed", x.seed);
    x.reps = s.unsigned_integer("reps", x.reps);
    if (const json* ns = s.child("Ns")) {
      x.ns.clear();
      for (double v : Section::number_list(*ns, "experiment.Ns")) {
        if (!(v >= 1.0) || v != std::floor(v)) {
          throw ConfigError("experiment.Ns", "entries must be positive integers");
        }
        x.ns.push_back(static_cast<std::size_t>(v));
      }
    }
    x.n = s.unsigned_integer("N", x.n);
    x.grid_cells = static_cast<int>(s.integer("grid", x.grid_cells));
    x.limit_grid_cells = static_cast<int>(s.integer("limit_grid", x.limit_grid_cells));
    x.n_ref = s.unsigned_integer("n_ref", x.n_ref);
    x.n_proj = static_cast<int>(s.integer("n_proj", x.n_proj));
    x.checkpoints = s.numbers("checkpoints", {});
    if (const json* b = s.child("bank")) {
      x.bank.clear();
      for (double v : Section::number_list(*b, "experiment.bank")) {
        if (!(v >= 0.0 && v < 8.0) || v != std::floor(v)) {
          throw ConfigError("experiment.bank", "entries must be indices 0..7");
        }
        x.bank.push_back(static_cast<std::size_t>(v));
      }
    }
    x.workers = static_cast<int>(s.integer("workers", x.workers));
    s.finish();
  }
  if (x.reps < 1) throw ConfigError("experiment.reps", "must be >= 1");
  if (x.n < 1) throw ConfigError("experiment.N", "must be >= 1");
  if (x.grid_cells < 16) throw ConfigError("experiment.grid", "must be >= 16");
  if (x.limit_grid_cells < 16) throw ConfigError("experiment.limit_grid", "must be >= 16");
  if (x.n_proj < 1) throw ConfigError("experiment.n_proj", "must be >= 1");
  if (x.workers < 0) throw ConfigError("experiment.workers", "must be >= 0");
  if (x.bank.empty()) throw ConfigError("experiment.bank", "must not be empty");
  root.finish();
  return rc;
}

RunConfig parse_config_text(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("malformed JSON: ") + e.what());
  }
  return parse_config(doc);
}

RunConfig parse_config_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("", "cannot open config file " + path.string());
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_config_text(text);
}

json to_json(const RunConfig& rc) {
  const ModelConfig& m = rc.model;
  json kernel{{"family", kernel_family(m.kernel.family)}, {"beta", m.kernel.beta}};
  if (m.kernel.family == KernelSpec::Family::gaussian) kernel["length"] = m.kernel.length;
  if (m.kernel.family == KernelSpec::Family::bump) kernel["radius"] = m.kernel.length;

  json drift{{"family", drift_family(m.drift.family)}};
  if (m.drift.family != DriftSpec::Family::zero) {
    drift["speed"] = m.drift.speed;
    drift["length"] = m.drift.length;
  }
  if (m.drift.family == DriftSpec::Family::state_modulated) {
    drift["weights"] = m.drift.weights;
  }

  json diffusion;
  if (m.diffusion.is_constant()) {
    diffusion = json{{"family", "constant"}, {"sigma", m.diffusion.base}};
  } else {
    diffusion = json{{"family", "smooth_bounded"},
                     {"base", m.diffusion.base},
                     {"amplitude", m.diffusion.amplitude},
                     {"length", m.diffusion.length}};
  }

  json spatial = json::object();
  for (EpidemicState e : kStates) {
    json comps = json::array();
    for (const auto& g : m.initial.spatial[code(e)]) comps.push_back(component_json(g));
    spatial[std::string(to_string(e))] = comps;
  }

  const ExperimentParams& x = rc.experiment;
  return json{
      {"dimension", m.dim},
      {"gamma", m.gamma},
      {"kernel", kernel},
      {"drift", drift},
      {"diffusion", diffusion},
      {"initial", {{"state_probabilities", m.initial.state_probabilities}, {"spatial", spatial}}},
      {"simulation",
       {{"mode", rc.scheme.mode == JumpMode::split_step ? "split_step" : "thinning"},
        {"dt", rc.scheme.dt},
        {"final_time", rc.final_time},
        {"cell_list", rc.scheme.cell_list}}},
      {"experiment",
       {{"seed", x.seed},
        {"reps", x.reps},
        {"Ns", x.ns},
        {"N", x.n},
        {"grid", x.grid_cells},
        {"limit_grid", x.limit_grid_cells},
        {"n_ref", x.n_ref},
        {"n_proj", x.n_proj},
        {"checkpoints", x.checkpoints},
        {"bank", x.bank},
        {"workers", x.workers}}}};
}

std::string config_hash(const RunConfig& config) {
  json doc = to_json(config);
  // Worker count never changes results, so it does not enter the hash.
  doc["experiment"].erase("workers");
  return sha256_hex(doc.dump());
}

std::string sha256_hex(std::string_view bytes) {
  Sha256 h;
  h.update(bytes.data(), bytes.size());
  return h.hex_digest();
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("sha256_file: cannot open " + path.string());
  Sha256 h;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    h.update(buf, static_cast<std::size_t>(in.gcount()));
  }
  return h.hex_digest();
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

void write_trajectory_csv(std::ostream& os, std::size_t rep, const Trajectory& traj,
                          bool header) {
  const int d = traj.config.dim;
  if (header) {
    os << "rep,t,individual";
    for (int k = 1; k <= d; ++k) os << ",x_" << k;
    os << ",state\n";
  }
  for (const auto& snap : traj.snapshots) {
    const std::string t = format_double(snap.time);
    for (std::size_t i = 0; i < snap.size(); ++i) {
      os << rep << ',' << t << ',' << i;
      for (double x : snap.position(i)) os << ',' << format_double(x);
      os << ',' << state_name(snap.states[i]) << '\n';
    }
  }
}

void write_events_csv(std::ostream& os, std::size_t rep, const EventLog& log, bool header) {
  if (header) os << "rep,t,individual,from,to\n";
  for (const auto& j : log.jumps) {
    os << rep << ',' << format_double(j.time) << ',' << j.individual << ',' << state_name(j.from)
       << ',' << state_name(j.to) << '\n';
  }
}

void write_density_csv(std::ostream& os, const DensityTrajectory& traj) {
  os << "t,cell_center,rho_S,rho_I,rho_R\n";
  const double h = traj.grid.h();
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const std::string t = format_double(traj.times[k]);
    for (int c = 0; c < traj.grid.cells; ++c) {
      const auto cc = static_cast<std::size_t>(c);
      os << t << ',' << format_double(traj.grid.center(c)) << ','
         << format_double(traj.mass[k][0][cc] / h) << ',' << format_double(traj.mass[k][1][cc] / h)
         << ',' << format_double(traj.mass[k][2][cc] / h) << '\n';
    }
  }
}

void write_rate_csv(std::ostream& os, const RateTable& table) {
  os << "N,reps,mean_w1,se\n";
  for (const auto& r : table.rows) {
    os << r.n << ',' << r.reps << ',' << format_double(r.mean_w1) << ',' << format_double(r.se)
       << '\n';
  }
}

void write_fluctuation_csv(std::ostream& os, const CltResult& result,
                           const std::vector<std::size_t>& phi_ids, std::string_view source,
                           bool header, bool source_column) {
  if (phi_ids.size() != result.bank.size()) {
    throw UsageError("write_fluctuation_csv: one phi id per bank function required");
  }
  if (header) {
    if (source_column) os << "source,";
    os << "rep,state,phi_id,t,eta,martingale,qv_formula\n";
  }
  for (const auto& s : result.samples) {
    for (EpidemicState e : kStates) {
      for (std::size_t k = 0; k < result.bank.size(); ++k) {
        for (std::size_t c = 0; c < result.checkpoints.size(); ++c) {
          const std::size_t idx = result.index(e, k, c);
          if (source_column) os << source << ',';
          os << s.rep << ',' << state_name(e) << ',' << phi_ids[k] << ','
             << format_double(result.checkpoints[c]) << ','
             << (std::isnan(s.eta[idx]) ? std::string() : format_double(s.eta[idx])) << ','
             << (s.martingale.empty() ? std::string() : format_double(s.martingale[idx])) << ','
             << (s.qv.empty() ? std::string() : format_double(s.qv[idx])) << '\n';
        }
      }
    }
  }
}

void write_density_cache(const std::filesystem::path& path, const DensityTrajectory& traj,
                         std::string_view key) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write density cache " + path.string());
  os.write(kCacheMagic, sizeof kCacheMagic);
  put(os, static_cast<std::uint32_t>(key.size()));
  os.write(key.data(), static_cast<std::streamsize>(key.size()));
  put(os, traj.grid.x_min);
  put(os, traj.grid.x_max);
  put(os, static_cast<std::int32_t>(traj.grid.cells));
  for (double v : {traj.dt, traj.initial_tail_mass, traj.clipped_mass, traj.max_clip_per_step,
                   traj.min_cell_before_clip, traj.max_mass_error}) {
    put(os, v);
  }
  put(os, static_cast<std::uint64_t>(traj.size()));
  for (std::size_t k = 0; k < traj.size(); ++k) {
    put(os, traj.times[k]);
    for (const auto& m : traj.mass[k]) {
      os.write(reinterpret_cast<const char*>(m.data()),
               static_cast<std::streamsize>(m.size() * sizeof(double)));
    }
  }
  if (!os) throw std::runtime_error("failed writing density cache " + path.string());
}

std::optional<DensityTrajectory> read_density_cache(const std::filesystem::path& path,
                                                    std::string_view key) {
  std::ifstream is(path, std::ios::binary);
  if (!is) return std::nullopt;
  char magic[sizeof kCacheMagic];
  if (!is.read(magic, sizeof magic) || std::memcmp(magic, kCacheMagic, sizeof magic) != 0) {
    return std::nullopt;
  }
  std::uint32_t klen = 0;
  if (!get(is, klen) || klen != key.size()) return std::nullopt;
  std::string stored(klen, '\0');
  if (!is.read(stored.data(), klen) || stored != key) return std::nullopt;
  DensityTrajectory traj;
  std::int32_t cells = 0;
  if (!get(is, traj.grid.x_min) || !get(is, traj.grid.x_max) || !get(is, cells)) {
    return std::nullopt;
  }
  traj.grid.cells = cells;
  for (double* v : {&traj.dt, &traj.initial_tail_mass, &traj.clipped_mass,
                    &traj.max_clip_per_step, &traj.min_cell_before_clip, &traj.max_mass_error}) {
    if (!get(is, *v)) return std::nullopt;
  }
  std::uint64_t count = 0;
  if (!get(is, count) || cells < 1) return std::nullopt;
  traj.times.resize(count);
  traj.mass.resize(count);
  for (std::size_t k = 0; k < count; ++k) {
    if (!get(is, traj.times[k])) return std::nullopt;
    for (auto& m : traj.mass[k]) {
      m.resize(static_cast<std::size_t>(cells));
      if (!is.read(reinterpret_cast<char*>(m.data()),
                   static_cast<std::streamsize>(m.size() * sizeof(double)))) {
        return std::nullopt;
      }
    }
  }
  return traj;
}

json ExperimentManifest::to_json() const {
  json outs = json::array();
  for (const auto& o : outputs) outs.push_back({{"path", o.path}, {"sha256", o.sha256}});
  return json{{"config_hash", config_hash},
              {"base_seed", base_seed},
              {"tool_version", tool_version},
              {"command", command},
              {"started", started},
              {"finished", finished},
              {"outputs", outs},
              {"verdicts", verdicts}};
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string tool_version() { return MFSIR_VERSION; }

}  // namespace mfsir
