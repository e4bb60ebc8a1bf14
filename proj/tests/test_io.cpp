#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>

#include "gpwaves/io.hpp"
#include "gpwaves/onedim.hpp"
#include "test_support.hpp"

using namespace gpwaves;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("gpwaves_test_io_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string error_of(const std::vector<std::uint8_t>& bytes) {
  try {
    decode_field(bytes);
  } catch (const IoError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("GPWF round trip is bit-identical") {
  for (auto bc : {TransverseBc::dirichlet_one, TransverseBc::periodic}) {
    for (int dim : {1, 2, 3}) {
      const Grid g = make_grid(dim, 4.0, 2.0, 0.5, bc);
      const Field f = testing::random_smooth_field(g, 40 + dim, 0.9);
      const FieldFile back = decode_field(encode_field(f, 0.75));
      CHECK(back.field.grid() == g);
      CHECK(back.c == 0.75);
      CHECK(std::memcmp(back.field.values().data(), f.values().data(), sizeof(Complex) * f.size()) == 0);
    }
  }
  const Grid g = line_grid(5.0, 0.5);
  CHECK(std::isnan(decode_field(encode_field(Field::constant(g, Complex(1, 0)))).c));
}

TEST_CASE("GPWF header layout") {
  const Grid g = make_grid(2, 4.0, 2.0, 0.5);
  const auto bytes = encode_field(Field::constant(g, Complex(1, 0)), 0.5);
  REQUIRE(bytes.size() == 4 + 4 + 4 + 2 * 4 + 3 * 8 + 1 + 8 + 16 * static_cast<std::size_t>(g.size()));
  CHECK(bytes[0] == 'G');
  CHECK(bytes[3] == 'F');
  CHECK(bytes[4] == 1);  // version, little-endian
  CHECK(bytes[5] == 0);
  CHECK(bytes[8] == 2);  // dim
  CHECK(bytes[12] == 17);  // 2 * 4 / 0.5 + 1 samples along x1
  CHECK(bytes[16] == 9);
  CHECK(bytes[44] == 0);  // bc flag after h, N, M
}

TEST_CASE("malformed GPWF files name the offending byte offset") {
  const Grid g = make_grid(2, 4.0, 2.0, 0.5);
  const auto good = encode_field(Field::constant(g, Complex(1, 0)));

  auto bad_magic = good;
  bad_magic[2] = 'X';
  CHECK(error_of(bad_magic).find("byte offset 2") != std::string::npos);

  auto v2 = good;
  v2[4] = 2;
  const std::string version_error = error_of(v2);
  CHECK(version_error.find("unsupported GPWF version 2") != std::string::npos);
  CHECK(version_error.find("byte offset 4") != std::string::npos);

  auto truncated = good;
  truncated.resize(30);
  CHECK(error_of(truncated).find("byte offset 30") != std::string::npos);

  auto short_values = good;
  short_values.resize(good.size() - 5);
  CHECK(error_of(short_values).find("byte offset " + std::to_string(good.size() - 5)) != std::string::npos);

  auto bad_count = good;
  bad_count[12] = 18;
  CHECK(error_of(bad_count).find("byte offset 12") != std::string::npos);

  auto bad_bc = good;
  bad_bc[44] = 7;
  CHECK(error_of(bad_bc).find("byte offset 44") != std::string::npos);

  auto trailing = good;
  trailing.push_back(0);
  CHECK(error_of(trailing).find("byte offset " + std::to_string(good.size())) != std::string::npos);

  CHECK(error_of({}).find("byte offset 0") != std::string::npos);
}

TEST_CASE("files are written atomically and hashed with FNV-1a") {
  const fs::path dir = scratch_dir("atomic");
  const std::string path = (dir / "x.txt").string();
  atomic_write(path, std::string("hello"));
  CHECK_FALSE(fs::exists(path + ".tmp"));
  atomic_write(path, std::string("a"));
  const auto bytes = read_bytes(path);
  CHECK(std::string(bytes.begin(), bytes.end()) == "a");
  // published FNV-1a 64 test vectors
  CHECK(fnv1a64(nullptr, 0) == 0xcbf29ce484222325ULL);
  CHECK(file_hash(path) == "af63dc4c8601ec8c");
  CHECK_THROWS_AS(read_bytes((dir / "missing").string()), IoError);
  CHECK_THROWS_AS(atomic_write((dir / "no" / "such" / "dir.txt").string(), std::string("x")), IoError);

  const Field f = testing::random_smooth_field(make_grid(2, 4.0, 2.0, 0.5), 3);
  write_field((dir / "f.gpwf").string(), f, 0.9);
  const FieldFile back = read_field((dir / "f.gpwf").string());
  CHECK((back.field.values() - f.values()).norm() == 0.0);
}

TEST_CASE("17 significant digits round-trip") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, std::nextafter(1.0, 2.0)}) {
    CHECK(std::stod(format_double(v)) == v);
  }
  CHECK(format_double(std::nan("")) == "nan");
}

TEST_CASE("key=value configuration") {
  const auto kv = parse_key_values("# comment\nc = 0.7\n\nbc-transverse=periodic  # trailing\nN=10\n");
  CHECK(kv.at("c") == "0.7");
  CHECK(kv.at("bc_transverse") == "periodic");
  SolverConfig cfg;
  for (const auto& [k, v] : kv) apply_config_value(cfg, k, v);
  CHECK(cfg.c == 0.7);
  CHECK(cfg.N == 10);
  CHECK(cfg.bc == TransverseBc::periodic);
  CHECK_THROWS_AS(apply_config_value(cfg, "speed", "1"), ConfigError);
  CHECK_THROWS_AS(apply_config_value(cfg, "c", "fast"), ConfigError);
  CHECK_THROWS_AS(apply_config_value(cfg, "compute_morse", "maybe"), ConfigError);
  CHECK_THROWS_AS(parse_key_values("novalue\n"), ConfigError);
}

TEST_CASE("configuration and manifest round-trip through JSON") {
  SolverConfig cfg;
  cfg.c = 1.0 / 3.0;
  cfg.rng_seed = 0xfedcba9876543210ULL;
  cfg.bc = TransverseBc::periodic;
  cfg.compute_morse = false;
  const SolverConfig back = solver_config_from_json(Json::parse(to_json(cfg).dump()));
  CHECK(to_json(back).dump() == to_json(cfg).dump());
  CHECK(back.rng_seed == cfg.rng_seed);

  RunManifest m;
  m.tool_version = tool_version();
  m.source_id = source_id();
  m.command = "sweep";
  m.config = cfg;
  m.c_values = {0.5, 0.7};
  m.N_values = {8, 12};
  m.created_at = utc_timestamp();
  m.finished_at = m.created_at;
  m.output_hashes["sweep.csv"] = "0123456789abcdef";
  const RunManifest m2 = run_manifest_from_json(Json::parse(to_json(m).dump(2)));
  CHECK(to_json(m2).dump() == to_json(m).dump());
  CHECK_THROWS_AS(run_manifest_from_json(Json::parse("{}")), ConfigError);
}

TEST_CASE("report formats") {
  SweepTable t;
  SweepRow r;
  r.c = 0.5;
  r.N = 12;
  r.gamma = 1.0 / 3.0;
  r.sigma = 2.0 / 3.0;
  r.morse_index = 1;
  r.converged = true;
  t.rows.push_back(r);
  r.morse_index.reset();
  r.converged = false;
  t.rows.push_back(r);
  const std::string csv = sweep_csv(t);
  std::istringstream in(csv);
  std::string header, row1, row2;
  std::getline(in, header);
  std::getline(in, row1);
  std::getline(in, row2);
  CHECK(header == "c,N,gamma,sigma,energy,momentum,lagrangian,morse_index,converged");
  CHECK(row1.rfind("0.5,12,0.33333333333333331,0.66666666666666663,", 0) == 0);
  CHECK(row1.substr(row1.size() - 7) == ",1,true");
  CHECK(row2.find("not computed,false") != std::string::npos);
  CHECK(std::stod(row1.substr(7, row1.find(',', 7) - 7)) == 1.0 / 3.0);

  CHECK(path_profile_csv({0.0, 0.5}) == "node,lagrangian\n0,0\n1,0.5\n");
  const Json fj = to_json(lagrangian(Field::constant(line_grid(5.0, 0.5), Complex(1, 0)), 0.4));
  for (const char* key : {"energy", "momentum", "lagrangian", "transverse_A", "longitudinal_B", "c"}) {
    CHECK(fj.contains(key));
  }
}

TEST_CASE("analysis JSON of an exact soliton") {
  const Grid g = line_grid(20.0, 0.01);
  const Json j = analysis_json(sample_soliton(g, SolitonParams{1.0, 0}), 1.0);
  CHECK(j.at("el_residual_max").get<double>() <= 1e-3);
  CHECK(j.at("sublevel_measures").size() == 9);
  CHECK(j.contains("decay_fit"));
}
