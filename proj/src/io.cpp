#include "gpwaves/io.hpp"

#include <bit>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include "gpwaves/errors.hpp"

#ifndef GPWAVES_VERSION
#define GPWAVES_VERSION "0.0.0"
#endif
#ifndef GPWAVES_SOURCE_ID
#define GPWAVES_SOURCE_ID "unknown"
#endif

namespace gpwaves {

std::string tool_version() { return GPWAVES_VERSION; }
std::string source_id() { return GPWAVES_SOURCE_ID; }

namespace {

constexpr std::uint32_t kFormatVersion = 1;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<std::uint8_t>(bits >> (8 * b)));
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  std::size_t offset() const { return pos_; }

  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) {
      throw IoError(std::string("truncated GPWF file: missing ") + what + " at byte offset " +
                    std::to_string(bytes_.size()));
    }
  }

  std::uint8_t u8(const char* what) {
    need(1, what);
    return bytes_[pos_++];
  }

  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(bytes_[pos_ + static_cast<std::size_t>(b)]) << (8 * b);
    pos_ += 4;
    return v;
  }

  double f64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(bytes_[pos_ + static_cast<std::size_t>(b)]) << (8 * b);
    pos_ += 8;
    return std::bit_cast<double>(v);
  }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

IoError bad_byte(std::size_t offset, const std::string& what) {
  return IoError("malformed GPWF file: " + what + " at byte offset " + std::to_string(offset));
}

std::string normalize_key(std::string key) {
  for (char& ch : key) {
    if (ch == '-') ch = '_';
  }
  return key;
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("invalid number for " + key + ": '" + value + "'");
  }
}

long long parse_integer(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("invalid integer for " + key + ": '" + value + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError("invalid boolean for " + key + ": '" + value + "'");
}

Json nullable(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

}  // namespace

std::vector<std::uint8_t> encode_field(const Field& f, double c) {
  const Grid& g = f.grid();
  std::vector<std::uint8_t> out{'G', 'P', 'W', 'F'};
  put_u32(out, kFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(g.dim));
  for (int a = 0; a < g.dim; ++a) put_u32(out, static_cast<std::uint32_t>(g.counts[static_cast<std::size_t>(a)]));
  put_f64(out, g.spacing);
  put_f64(out, g.half_length_x1);
  put_f64(out, g.half_length_transverse);
  out.push_back(static_cast<std::uint8_t>(g.bc_transverse));
  put_f64(out, c);
  out.reserve(out.size() + static_cast<std::size_t>(16 * f.size()));
  for (Index p = 0; p < f.size(); ++p) {
    put_f64(out, f[p].real());
    put_f64(out, f[p].imag());
  }
  return out;
}

FieldFile decode_field(const std::vector<std::uint8_t>& bytes) {
  static const char magic[4] = {'G', 'P', 'W', 'F'};
  for (std::size_t i = 0; i < 4; ++i) {
    if (i >= bytes.size()) throw IoError("truncated GPWF file: missing magic at byte offset " + std::to_string(i));
    if (bytes[i] != static_cast<std::uint8_t>(magic[i])) throw bad_byte(i, "bad magic (expected \"GPWF\")");
  }
  Reader r(bytes);
  (void)r.u32("magic");
  const std::size_t version_at = r.offset();
  const std::uint32_t version = r.u32("format version");
  if (version != kFormatVersion) {
    throw IoError("unsupported GPWF version " + std::to_string(version) + " at byte offset " +
                  std::to_string(version_at) + " (supported: 1)");
  }
  const std::size_t dim_at = r.offset();
  const std::uint32_t dim = r.u32("dimension");
  if (dim < 1 || dim > 3) throw bad_byte(dim_at, "dimension " + std::to_string(dim) + " outside 1..3");
  std::array<std::uint32_t, 3> counts{1, 1, 1};
  std::array<std::size_t, 3> count_at{0, 0, 0};
  for (std::uint32_t a = 0; a < dim; ++a) {
    count_at[a] = r.offset();
    counts[a] = r.u32("sample count");
  }
  const std::size_t h_at = r.offset();
  const double h = r.f64("spacing");
  const double n = r.f64("N");
  const double m = r.f64("M");
  const std::size_t bc_at = r.offset();
  const std::uint8_t bc = r.u8("transverse boundary flag");
  if (bc > 1) throw bad_byte(bc_at, "transverse boundary flag " + std::to_string(bc) + " is neither 0 nor 1");
  FieldFile out;
  out.c = r.f64("speed");

  Grid g;
  try {
    g = make_grid(static_cast<int>(dim), n, m, h, static_cast<TransverseBc>(bc));
  } catch (const ConfigError& e) {
    throw bad_byte(h_at, std::string("inconsistent grid parameters (") + e.what() + ")");
  }
  for (std::uint32_t a = 0; a < dim; ++a) {
    if (static_cast<Index>(counts[a]) != g.counts[a]) {
      throw bad_byte(count_at[a], "sample count " + std::to_string(counts[a]) + " does not match h, N, M (expected " +
                                      std::to_string(g.counts[a]) + ")");
    }
  }
  const std::size_t values_at = r.offset();
  const std::size_t expected = values_at + 16 * static_cast<std::size_t>(g.size());
  if (bytes.size() < expected) {
    throw IoError("truncated GPWF file: values end at byte offset " + std::to_string(bytes.size()) + ", expected " +
                  std::to_string(expected) + " bytes");
  }
  if (bytes.size() > expected) throw bad_byte(expected, "trailing bytes after the values");
  Field f(g);
  for (Index p = 0; p < g.size(); ++p) {
    const double re = r.f64("value");
    const double im = r.f64("value");
    f[p] = Complex(re, im);
  }
  out.field = std::move(f);
  return out;
}

void write_field(const std::string& path, const Field& f, double c) { atomic_write(path, encode_field(f, c)); }

FieldFile read_field(const std::string& path) { return decode_field(read_bytes(path)); }

void atomic_write(const std::string& path, const std::vector<std::uint8_t>& contents) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  const fs::path tmp = target.parent_path() / (target.filename().string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(reinterpret_cast<const char*>(contents.data()), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot rename temporary file onto " + path);
  }
}

void atomic_write(const std::string& path, const std::string& contents) {
  atomic_write(path, std::vector<std::uint8_t>(contents.begin(), contents.end()));
}

std::vector<std::uint8_t> read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path + " for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed for " + path);
  return bytes;
}

std::uint64_t fnv1a64(const std::uint8_t* data, std::size_t size) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < size; ++i) {
    hash ^= data[i];
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::string file_hash(const std::string& path) {
  const auto bytes = read_bytes(path);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(bytes.data(), bytes.size())));
  return buf;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(number) + " has no '='");
    out[normalize_key(trim(line.substr(0, eq)))] = trim(line.substr(eq + 1));
  }
  return out;
}

std::map<std::string, std::string> read_config_file(const std::string& path) {
  const auto bytes = read_bytes(path);
  return parse_key_values(std::string(bytes.begin(), bytes.end()));
}

TransverseBc parse_bc(const std::string& text) {
  if (text == "dirichlet") return TransverseBc::dirichlet_one;
  if (text == "periodic") return TransverseBc::periodic;
  throw ConfigError("transverse boundary condition must be 'dirichlet' or 'periodic', got '" + text + "'");
}

void apply_config_value(SolverConfig& cfg, const std::string& raw_key, const std::string& value) {
  const std::string key = normalize_key(raw_key);
  if (key == "c") {
    cfg.c = parse_double(key, value);
  } else if (key == "dim") {
    cfg.dim = static_cast<int>(parse_integer(key, value));
  } else if (key == "N") {
    cfg.N = parse_double(key, value);
  } else if (key == "M") {
    cfg.M = parse_double(key, value);
  } else if (key == "h") {
    cfg.h = parse_double(key, value);
  } else if (key == "bc" || key == "bc_transverse") {
    cfg.bc = parse_bc(value);
  } else if (key == "path_nodes") {
    cfg.path_nodes = parse_integer(key, value);
  } else if (key == "descent_tol") {
    cfg.descent_tol = parse_double(key, value);
  } else if (key == "newton_tol") {
    cfg.newton_tol = parse_double(key, value);
  } else if (key == "max_descent_iters") {
    cfg.max_descent_iters = parse_integer(key, value);
  } else if (key == "max_newton_iters") {
    cfg.max_newton_iters = parse_integer(key, value);
  } else if (key == "seed_amplitude") {
    cfg.seed_amplitude = parse_double(key, value);
  } else if (key == "rng_seed") {
    const long long v = parse_integer(key, value);
    if (v < 0) throw ConfigError("rng_seed must be non-negative");
    cfg.rng_seed = static_cast<std::uint64_t>(v);
  } else if (key == "compute_morse") {
    cfg.compute_morse = parse_bool(key, value);
  } else {
    throw ConfigError("unknown configuration key '" + raw_key + "'");
  }
}

Json to_json(const SolverConfig& cfg) {
  Json j;
  j["c"] = cfg.c;
  j["dim"] = cfg.dim;
  j["N"] = cfg.N;
  j["M"] = cfg.M;
  j["h"] = cfg.h;
  j["bc_transverse"] = to_string(cfg.bc);
  j["path_nodes"] = cfg.path_nodes;
  j["descent_tol"] = cfg.descent_tol;
  j["newton_tol"] = cfg.newton_tol;
  j["max_descent_iters"] = cfg.max_descent_iters;
  j["max_newton_iters"] = cfg.max_newton_iters;
  j["seed_amplitude"] = cfg.seed_amplitude;
  j["rng_seed"] = cfg.rng_seed;
  j["compute_morse"] = cfg.compute_morse;
  return j;
}

SolverConfig solver_config_from_json(const Json& j) {
  try {
    SolverConfig cfg;
    cfg.c = j.at("c").get<double>();
    cfg.dim = j.at("dim").get<int>();
    cfg.N = j.at("N").get<double>();
    cfg.M = j.at("M").get<double>();
    cfg.h = j.at("h").get<double>();
    cfg.bc = parse_bc(j.at("bc_transverse").get<std::string>());
    cfg.path_nodes = j.at("path_nodes").get<Index>();
    cfg.descent_tol = j.at("descent_tol").get<double>();
    cfg.newton_tol = j.at("newton_tol").get<double>();
    cfg.max_descent_iters = j.at("max_descent_iters").get<Index>();
    cfg.max_newton_iters = j.at("max_newton_iters").get<Index>();
    cfg.seed_amplitude = j.at("seed_amplitude").get<double>();
    cfg.rng_seed = j.at("rng_seed").get<std::uint64_t>();
    cfg.compute_morse = j.at("compute_morse").get<bool>();
    return cfg;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid solver configuration: ") + e.what());
  }
}

Json to_json(const FunctionalReport& r) {
  Json j;
  j["energy"] = r.energy;
  j["momentum"] = r.momentum;
  j["lagrangian"] = r.lagrangian;
  j["transverse_A"] = r.transverse_A;
  j["longitudinal_B"] = r.longitudinal_B;
  j["c"] = r.c;
  return j;
}

Json to_json(const SpectrumReport& r) {
  Json j;
  j["negative_count"] = r.negative_count;
  j["smallest_eigs"] = r.smallest_eigs;
  j["shift_used"] = r.shift_used;
  j["method"] = to_string(r.method);
  j["dimension"] = r.dimension;
  j["sensitivity"] = {{"cutoff_minus_1e-8", r.count_below_lower}, {"cutoff_plus_1e-8", r.count_below_upper}};
  j["eigs_converged"] = r.eigs_converged;
  j["warning"] = r.warning;
  return j;
}

Json to_json(const VortexSet& v) {
  Json j;
  Json plaquettes = Json::array();
  for (const auto& p : v.plaquettes) plaquettes.push_back({{"cell", p.cell}, {"winding", p.winding}});
  j["plaquettes"] = plaquettes;
  j["total_winding"] = v.total_winding();
  Json balls = Json::array();
  for (const auto& b : v.balls) balls.push_back({{"center", b.center}, {"radius", b.radius}});
  j["balls"] = balls;
  j["degenerate_cells"] = v.degenerate_cells;
  j["low_modulus_cells"] = v.low_modulus_cells.size();
  j["aggregation_rounds"] = v.aggregation_rounds;
  return j;
}

Json to_json(const SolveReport& r) {
  Json j;
  j["tool_version"] = tool_version();
  j["config"] = to_json(r.config);
  j["converged"] = r.converged;
  j["trivial"] = r.trivial;
  j["functional"] = to_json(r.functional);
  j["gamma_estimate"] = r.gamma_estimate;
  j["el_residual_max"] = r.residual;
  j["pohozaev_residuals"] = {{"r1", r.pohozaev.r1}, {"r2", r.pohozaev.r2}, {"r1_extrapolated", r.pohozaev.r1_extrapolated}};
  j["morse_index"] = r.morse_index ? Json(*r.morse_index) : Json("not computed");
  j["vortices"] = to_json(r.vortices);
  j["iterations"] = {{"descent", r.descent.iterations},
                     {"reparametrizations", r.descent.reparametrizations},
                     {"line_search_failures", r.descent.line_search_failures},
                     {"newton", r.newton.iterations},
                     {"linear", r.newton.linear_iterations}};
  j["descent_converged"] = r.descent_converged;
  j["descent_residual"] = r.descent.final_residual;
  j["newton_residuals"] = r.newton.residual_history;
  j["endpoint_separation"] = r.endpoint_separation;
  j["max_modulus"] = r.max_modulus;
  j["max_deviation"] = r.max_deviation;
  j["boundary_distance_ratio"] = r.boundary_distance_ratio;
  j["warnings"] = r.warnings;
  return j;
}

Json analysis_json(const Field& f, double c) {
  Json j;
  j["functional"] = to_json(lagrangian(f, c));
  j["el_residual_max"] = el_residual(f, c).max_abs();
  const PohozaevResiduals poho = pohozaev_residuals(f, c);
  j["pohozaev_residuals"] = {{"r1", poho.r1}, {"r2", poho.r2}, {"scale", poho.scale}, {"r1_extrapolated", poho.r1_extrapolated}};
  try {
    const Lifting l = lift(f);
    const LiftingIdentities id = lifting_momentum_identities(l, c);
    const double p = momentum(f);
    j["lifting"] = {{"invalid_samples", l.invalid_count},
                    {"holes", l.hole_count},
                    {"p_lift", id.p_lift},
                    {"p_lift_relative_error", std::abs(id.p_lift - p) / (std::abs(p) + 1e-10)},
                    {"id2", id.id2},
                    {"id3", id.id3},
                    {"approximate", id.approximate}};
  } catch (const DomainError& e) {
    j["lifting"] = {{"error", e.what()}};
  }
  if (f.grid().dim >= 2) j["vortices"] = to_json(vortex_detect(f));
  Json sub = Json::array();
  for (int k = 1; k <= 9; ++k) {
    const double r = 0.1 * k;
    sub.push_back({{"r", r}, {"measure", sublevel_measure(f, r)}});
  }
  j["sublevel_measures"] = sub;
  const DecayFit fit = decay_fit(f);
  j["decay_fit"] = {{"exp_v", nullable(fit.exp_v)},   {"exp_u", nullable(fit.exp_u)},
                    {"width_v", nullable(fit.width_v)}, {"width_u", nullable(fit.width_u)},
                    {"samples", fit.samples},           {"underflow", fit.underflow}};
  return j;
}

std::string sweep_csv(const SweepTable& t) {
  std::string out = "c,N,gamma,sigma,energy,momentum,lagrangian,morse_index,converged\n";
  for (const SweepRow& r : t.rows) {
    out += format_double(r.c) + "," + format_double(r.N) + "," + format_double(r.gamma) + "," + format_double(r.sigma) +
           "," + format_double(r.energy) + "," + format_double(r.momentum) + "," + format_double(r.lagrangian) + "," +
           (r.morse_index ? std::to_string(*r.morse_index) : std::string("not computed")) + "," +
           (r.converged ? "true" : "false") + "\n";
  }
  return out;
}

Json to_json(const SweepTable& t) {
  Json rows = Json::array();
  for (const SweepRow& r : t.rows) {
    rows.push_back({{"c", r.c},
                    {"N", r.N},
                    {"gamma", nullable(r.gamma)},
                    {"sigma", nullable(r.sigma)},
                    {"energy", nullable(r.energy)},
                    {"momentum", nullable(r.momentum)},
                    {"lagrangian", nullable(r.lagrangian)},
                    {"morse_index", r.morse_index ? Json(*r.morse_index) : Json("not computed")},
                    {"converged", r.converged},
                    {"flags", r.flags},
                    {"error", r.error}});
  }
  return Json{{"rows", rows}};
}

std::string path_profile_csv(const std::vector<double>& profile) {
  std::string out = "node,lagrangian\n";
  for (std::size_t k = 0; k < profile.size(); ++k) out += std::to_string(k) + "," + format_double(profile[k]) + "\n";
  return out;
}

std::string circular_scan_csv(const std::vector<CircularScanRow>& rows) {
  std::string out = "L,predicted,computed\n";
  for (const auto& r : rows) {
    out += format_double(r.length) + "," + std::to_string(r.predicted) + "," + std::to_string(r.computed) + "\n";
  }
  return out;
}

Json to_json(const RunManifest& m) {
  Json j;
  j["tool_version"] = m.tool_version;
  j["source_id"] = m.source_id;
  j["command"] = m.command;
  j["config"] = to_json(m.config);
  j["c_values"] = m.c_values;
  j["N_values"] = m.N_values;
  j["created_at"] = m.created_at;
  j["finished_at"] = m.finished_at;
  j["input_hashes"] = m.input_hashes;
  j["output_hashes"] = m.output_hashes;
  return j;
}

RunManifest run_manifest_from_json(const Json& j) {
  try {
    RunManifest m;
    m.tool_version = j.at("tool_version").get<std::string>();
    m.source_id = j.at("source_id").get<std::string>();
    m.command = j.at("command").get<std::string>();
    m.config = solver_config_from_json(j.at("config"));
    m.c_values = j.at("c_values").get<std::vector<double>>();
    m.N_values = j.at("N_values").get<std::vector<double>>();
    m.created_at = j.at("created_at").get<std::string>();
    m.finished_at = j.at("finished_at").get<std::string>();
    m.input_hashes = j.at("input_hashes").get<std::map<std::string, std::string>>();
    m.output_hashes = j.at("output_hashes").get<std::map<std::string, std::string>>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid run manifest: ") + e.what());
  }
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace gpwaves
