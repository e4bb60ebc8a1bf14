#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include "gpwaves/io.hpp"

using namespace gpwaves;
namespace fs = std::filesystem;

namespace {

const fs::path& scratch() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "gpwaves_test_cli";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

struct Result {
  int status = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Result run(const std::string& args, const std::string& env = "GPWAVES_THREADS=1") {
  const fs::path out = scratch() / "stdout.txt";
  const fs::path err = scratch() / "stderr.txt";
  const std::string cmd = env + " \"" GPWAVES_CLI "\" " + args + " > \"" + out.string() + "\" 2> \"" + err.string() + "\"";
  const int raw = std::system(cmd.c_str());
  Result r;
  r.status = (raw != -1 && WIFEXITED(raw)) ? WEXITSTATUS(raw) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

std::string path(const std::string& name) { return "\"" + (scratch() / name).string() + "\""; }

}  // namespace

TEST_CASE("soliton fixture validates") {
  const Result s = run("soliton --c 1.0 --N 20 --h 0.01 --out " + path("sol.gpwf"));
  REQUIRE(s.status == 0);
  const FieldFile f = read_field((scratch() / "sol.gpwf").string());
  CHECK(f.c == 1.0);
  CHECK(f.field.grid().dim == 1);

  const Result v = run("validate " + path("sol.gpwf") + " --c 1.0");
  CHECK(v.status == 0);
  const Json j = Json::parse(v.out);
  CHECK(j.at("passed").get<bool>());
  CHECK(j.at("el_residual_max").get<double>() <= 1e-3);

  const Result strict = run("validate " + path("sol.gpwf") + " --tol 1e-12");
  CHECK(strict.status == 3);
  CHECK_FALSE(Json::parse(strict.out).at("passed").get<bool>());
}

TEST_CASE("exit codes") {
  const Result unknown = run("solve --bogus 1 --out " + path("x"));
  CHECK(unknown.status == 2);
  CHECK(unknown.err.find("bogus") != std::string::npos);
  CHECK(unknown.err.find("Usage") != std::string::npos);

  CHECK(run("").status == 2);
  CHECK(run("solve --c 2.0 --N 12 --M 12 --h 0.1 --out " + path("super")).status == 2);
  CHECK(run("solve --c 0.9 --h fast --out " + path("bad")).status == 2);
  CHECK(run("analyze " + path("missing.gpwf")).status == 4);
  CHECK(run("sweep --c-list 0.9 --N-list 8 --out " + path("sw"), "GPWAVES_THREADS=zero").status == 2);

  std::ofstream(scratch() / "garbage.gpwf") << "GPWX";
  const Result bad = run("morse " + path("garbage.gpwf"));
  CHECK(bad.status == 4);
  CHECK(bad.err.find("byte offset 3") != std::string::npos);
}

TEST_CASE("circular scan CSV") {
  const Result r = run("circular-scan --c 0 --rho2 0.5 --lengths 20,40");
  REQUIRE(r.status == 0);
  CHECK(r.out.rfind("L,predicted,computed\n20,2,", 0) == 0);
  CHECK(run("circular-scan --c 0 --rho2 0.9").status == 2);
}

TEST_CASE("solve writes its artifacts and reruns from the manifest") {
  const std::string flags = "--c 0.9 --N 6 --M 6 --h 0.25 --path-nodes 9 --compute-morse false";
  std::ofstream(scratch() / "run.cfg") << "# coarse\nN = 6\nM=6\nh=0.25\npath-nodes=9\ncompute_morse=false\nc=0.5\n";
  const Result a = run("solve " + flags + " --out " + path("a"));
  REQUIRE(a.status == 0);
  for (const char* name : {"field.gpwf", "report.json", "path-profile.csv", "manifest.json"}) {
    CHECK(fs::exists(scratch() / "a" / name));
  }
  const Json manifest = Json::parse(slurp(scratch() / "a" / "manifest.json"));
  CHECK(manifest.at("output_hashes").at("report.json").get<std::string>() ==
        file_hash((scratch() / "a" / "report.json").string()));
  CHECK(slurp(scratch() / "a" / "path-profile.csv").rfind("node,lagrangian\n0,0\n", 0) == 0);

  const Result b = run("solve --manifest " + path("a/manifest.json") + " --out " + path("b"));
  REQUIRE(b.status == 0);
  CHECK(slurp(scratch() / "a" / "report.json") == slurp(scratch() / "b" / "report.json"));

  // flags override the config file, which overrides defaults
  const Result c = run("solve --config " + path("run.cfg") + " --c 0.9 --out " + path("c"));
  REQUIRE(c.status == 0);
  const Json rc = Json::parse(slurp(scratch() / "c" / "report.json"));
  CHECK(rc.at("config").at("c").get<double>() == 0.9);
  CHECK(rc.at("config").at("N").get<double>() == 6);
  CHECK(slurp(scratch() / "a" / "report.json") == slurp(scratch() / "c" / "report.json"));

  const Result m = run("morse " + path("a/field.gpwf"));
  REQUIRE(m.status == 0);
  CHECK(Json::parse(m.out).at("negative_count").get<Index>() == 1);
}

TEST_CASE("sweep writes a well-formed table") {
  const Result r = run("sweep --c-list 0.9,1.0 --N-list 6 --M 6 --h 0.25 --path-nodes 9 --compute-morse false --out " +
                       path("sweep"), "GPWAVES_THREADS=2");
  REQUIRE(r.status == 0);
  std::istringstream csv(slurp(scratch() / "sweep" / "sweep.csv"));
  std::string line;
  std::getline(csv, line);
  CHECK(line == "c,N,gamma,sigma,energy,momentum,lagrangian,morse_index,converged");
  int rows = 0;
  while (std::getline(csv, line)) {
    ++rows;
    CHECK(line.find(",not computed,") != std::string::npos);
  }
  CHECK(rows == 2);
  const Json manifest = Json::parse(slurp(scratch() / "sweep" / "manifest.json"));
  CHECK(manifest.at("c_values").size() == 2);
  CHECK(run("sweep --c-grid 0.9:0.8:0.1 --N-list 6 --out " + path("sweep2")).status == 2);
}
