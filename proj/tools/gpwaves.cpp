#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "gpwaves/analysis.hpp"
#include "gpwaves/errors.hpp"
#include "gpwaves/functionals.hpp"
#include "gpwaves/io.hpp"
#include "gpwaves/morse.hpp"
#include "gpwaves/onedim.hpp"
#include "gpwaves/solver.hpp"

namespace fs = std::filesystem;
using namespace gpwaves;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNonConvergence = 3;
constexpr int kExitIo = 4;

// Solver flags; each is applied only when given on the command line.
struct ConfigFlags {
  std::vector<std::pair<CLI::Option*, std::string>> options;
  std::string storage[14];
  std::string config_file;
  std::string manifest_file;
  CLI::Option* config_opt = nullptr;
  CLI::Option* manifest_opt = nullptr;

  void add(CLI::App* app, bool with_c) {
    const char* names[][2] = {{"--c", "c"},
                              {"--dim", "dim"},
                              {"--N", "N"},
                              {"--M", "M"},
                              {"--h", "h"},
                              {"--bc-transverse", "bc_transverse"},
                              {"--path-nodes", "path_nodes"},
                              {"--descent-tol", "descent_tol"},
                              {"--newton-tol", "newton_tol"},
                              {"--max-descent-iters", "max_descent_iters"},
                              {"--max-newton-iters", "max_newton_iters"},
                              {"--seed-amplitude", "seed_amplitude"},
                              {"--rng-seed", "rng_seed"},
                              {"--compute-morse", "compute_morse"}};
    for (std::size_t k = 0; k < 14; ++k) {
      if (!with_c && k == 0) continue;
      options.emplace_back(app->add_option(names[k][0], storage[k], std::string("solver setting ") + names[k][1]),
                           names[k][1]);
    }
    config_opt = app->add_option("--config", config_file, "key=value configuration file");
    manifest_opt = app->add_option("--manifest", manifest_file, "re-run the configuration of a run manifest");
  }

  // defaults < manifest < config file < flags
  SolverConfig resolve(std::map<std::string, std::string>& input_hashes, RunManifest* manifest) const {
    SolverConfig cfg;
    if (manifest_opt->count()) {
      const auto bytes = read_bytes(manifest_file);
      Json j;
      try {
        j = Json::parse(bytes.begin(), bytes.end());
      } catch (const nlohmann::json::exception& e) {
        throw ConfigError("manifest " + manifest_file + " is not valid JSON: " + e.what());
      }
      *manifest = run_manifest_from_json(j);
      cfg = manifest->config;
      input_hashes["manifest"] = file_hash(manifest_file);
    }
    if (config_opt->count()) {
      for (const auto& [k, v] : read_config_file(config_file)) apply_config_value(cfg, k, v);
      input_hashes["config"] = file_hash(config_file);
    }
    for (const auto& [opt, key] : options) {
      if (opt->count()) apply_config_value(cfg, key, opt->as<std::string>());
    }
    return cfg;
  }
};

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("invalid list entry '" + item + "'");
    }
  }
  return out;
}

// start:stop:step inclusive of stop up to rounding.
std::vector<double> parse_grid(const std::string& text) {
  const auto parts = parse_list([&] {
    std::string t = text;
    for (char& ch : t) {
      if (ch == ':') ch = ',';
    }
    return t;
  }());
  if (parts.size() != 3 || !(parts[2] > 0) || parts[1] < parts[0]) {
    throw ConfigError("--c-grid must be start:stop:step with step > 0 and stop >= start");
  }
  std::vector<double> out;
  const auto count = static_cast<long>(std::floor((parts[1] - parts[0]) / parts[2] + 1e-9));
  for (long k = 0; k <= count; ++k) out.push_back(parts[0] + static_cast<double>(k) * parts[2]);
  return out;
}

int thread_count() {
  const char* env = std::getenv("GPWAVES_THREADS");
  if (!env || !*env) return 1;
  try {
    std::size_t used = 0;
    const int n = std::stoi(env, &used);
    if (used != std::string(env).size() || n < 1) throw std::invalid_argument(env);
    return n;
  } catch (const std::exception&) {
    throw ConfigError(std::string("GPWAVES_THREADS must be a positive integer, got '") + env + "'");
  }
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir);
}

std::string join(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

void emit(const std::string& out, const std::string& text) {
  if (out.empty()) {
    std::cout << text;
  } else {
    atomic_write(out, text);
  }
}

double speed_for(const FieldFile& file, CLI::Option* opt, double flag) {
  if (opt->count()) return flag;
  if (std::isnan(file.c)) throw ConfigError("the field file carries no speed; pass --c");
  return file.c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Traveling waves of the Gross-Pitaevskii equation on slabs"};
  app.require_subcommand(1);
  // "-h" would collide with the grid spacing flag --h.
  app.set_help_flag("--help", "print this help and exit");
  app.set_version_flag("--version", tool_version() + " (" + source_id() + ")");

  // solve
  auto* solve_cmd = app.add_subcommand("solve", "mountain-pass solve with Newton refinement");
  ConfigFlags solve_flags;
  solve_flags.add(solve_cmd, true);
  std::string solve_out;
  solve_cmd->add_option("--out", solve_out, "output directory")->required();

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "continuation sweep over c and N");
  ConfigFlags sweep_flags;
  sweep_flags.add(sweep_cmd, false);
  std::string c_grid, c_list, n_list, sweep_out;
  auto* c_grid_opt = sweep_cmd->add_option("--c-grid", c_grid, "start:stop:step");
  auto* c_list_opt = sweep_cmd->add_option("--c-list", c_list, "comma-separated speeds");
  c_grid_opt->excludes(c_list_opt);
  sweep_cmd->add_option("--N-list", n_list, "comma-separated slab half-lengths")->required();
  sweep_cmd->add_option("--out", sweep_out, "output directory")->required();

  // analyze
  auto* analyze_cmd = app.add_subcommand("analyze", "structure analysis of a field");
  std::string analyze_file, analyze_out;
  double analyze_c = 0;
  analyze_cmd->add_option("field", analyze_file, "GPWF file")->required();
  auto* analyze_c_opt = analyze_cmd->add_option("--c", analyze_c, "speed (default: the file's)");
  analyze_cmd->add_option("--out", analyze_out, "JSON output file (default: stdout)");

  // morse
  auto* morse_cmd = app.add_subcommand("morse", "Morse index of a field");
  std::string morse_file, morse_out;
  double morse_c = 0, cutoff = 0;
  morse_cmd->add_option("field", morse_file, "GPWF file")->required();
  auto* morse_c_opt = morse_cmd->add_option("--c", morse_c, "speed (default: the file's)");
  morse_cmd->add_option("--cutoff", cutoff, "count eigenvalues below this value");
  morse_cmd->add_option("--out", morse_out, "JSON output file (default: stdout)");

  // circular-scan
  auto* scan_cmd = app.add_subcommand("circular-scan", "Morse counts of circular waves against domain length");
  double scan_c = 0, rho2 = 0.5, scan_h = 0.1;
  std::string lengths = "20,40,80", scan_out;
  scan_cmd->add_option("--c", scan_c, "speed")->required();
  scan_cmd->add_option("--rho2", rho2, "squared modulus rho0^2")->required();
  scan_cmd->add_option("--lengths", lengths, "comma-separated domain lengths");
  scan_cmd->add_option("--h", scan_h, "grid spacing");
  scan_cmd->add_option("--out", scan_out, "CSV output file (default: stdout)");

  // soliton
  auto* soliton_cmd = app.add_subcommand("soliton", "write a sampled exact 1-D soliton");
  double sol_c = 0, sol_n = 20, sol_h = 0.01, sol_shift = 0;
  std::string sol_out;
  soliton_cmd->add_option("--c", sol_c, "speed in [0, sqrt 2)")->required();
  soliton_cmd->add_option("--N", sol_n, "half-length");
  soliton_cmd->add_option("--h", sol_h, "grid spacing");
  soliton_cmd->add_option("--shift", sol_shift, "center of the soliton");
  soliton_cmd->add_option("--out", sol_out, "GPWF output file")->required();

  // validate
  auto* validate_cmd = app.add_subcommand("validate", "identity suite of a field");
  std::string validate_file, validate_out;
  double validate_c = 0, validate_tol = 1e-3;
  validate_cmd->add_option("field", validate_file, "GPWF file")->required();
  auto* validate_c_opt = validate_cmd->add_option("--c", validate_c, "speed (default: the file's)");
  validate_cmd->add_option("--tol", validate_tol, "largest accepted EL residual max-norm");
  validate_cmd->add_option("--out", validate_out, "JSON output file (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kExitConfig;
  }

  try {
    if (solve_cmd->parsed()) {
      RunManifest manifest;
      std::map<std::string, std::string> inputs;
      const SolverConfig cfg = solve_flags.resolve(inputs, &manifest);
      cfg.validate();
      ensure_dir(solve_out);
      RunManifest m;
      m.tool_version = tool_version();
      m.source_id = source_id();
      m.command = "solve";
      m.config = cfg;
      m.created_at = utc_timestamp();
      m.input_hashes = inputs;
      const SolveReport rep = solve(cfg);
      const std::string field_path = join(solve_out, "field.gpwf");
      const std::string report_path = join(solve_out, "report.json");
      const std::string profile_path = join(solve_out, "path-profile.csv");
      write_field(field_path, rep.field, cfg.c);
      atomic_write(report_path, to_json(rep).dump(2) + "\n");
      atomic_write(profile_path, path_profile_csv(rep.path_profile));
      m.finished_at = utc_timestamp();
      m.output_hashes["field.gpwf"] = file_hash(field_path);
      m.output_hashes["report.json"] = file_hash(report_path);
      m.output_hashes["path-profile.csv"] = file_hash(profile_path);
      atomic_write(join(solve_out, "manifest.json"), to_json(m).dump(2) + "\n");
      std::cout << "converged=" << (rep.converged ? "true" : "false") << " I=" << format_double(rep.functional.lagrangian)
                << " residual=" << format_double(rep.residual) << "\n";
      for (const auto& w : rep.warnings) std::cerr << "warning: " << w << "\n";
      return rep.converged ? 0 : kExitNonConvergence;
    }

    if (sweep_cmd->parsed()) {
      RunManifest manifest;
      std::map<std::string, std::string> inputs;
      SolverConfig cfg = sweep_flags.resolve(inputs, &manifest);
      std::vector<double> cs, ns;
      if (c_grid_opt->count()) {
        cs = parse_grid(c_grid);
      } else if (c_list_opt->count()) {
        cs = parse_list(c_list);
      } else if (sweep_flags.manifest_opt->count()) {
        cs = manifest.c_values;
      } else {
        throw ConfigError("sweep needs --c-grid or --c-list");
      }
      ns = parse_list(n_list);
      if (!cs.empty()) {
        cfg.c = cs.front();
        cfg.validate();
      }
      const int threads = thread_count();
      ensure_dir(sweep_out);
      RunManifest m;
      m.tool_version = tool_version();
      m.source_id = source_id();
      m.command = "sweep";
      m.config = cfg;
      m.c_values = cs;
      m.N_values = ns;
      m.created_at = utc_timestamp();
      m.input_hashes = inputs;
      const SweepTable table = sweep(cs, ns, cfg, threads);
      const std::string csv_path = join(sweep_out, "sweep.csv");
      const std::string json_path = join(sweep_out, "sweep.json");
      atomic_write(csv_path, sweep_csv(table));
      atomic_write(json_path, to_json(table).dump(2) + "\n");
      m.finished_at = utc_timestamp();
      m.output_hashes["sweep.csv"] = file_hash(csv_path);
      m.output_hashes["sweep.json"] = file_hash(json_path);
      atomic_write(join(sweep_out, "manifest.json"), to_json(m).dump(2) + "\n");
      for (const auto& row : table.rows) {
        for (const auto& flag : row.flags) {
          std::cerr << "flag: c=" << format_double(row.c) << " N=" << format_double(row.N) << " " << flag << "\n";
        }
        if (!row.error.empty()) {
          std::cerr << "cell failed: c=" << format_double(row.c) << " N=" << format_double(row.N) << " " << row.error
                    << "\n";
        }
      }
      return 0;
    }

    if (analyze_cmd->parsed()) {
      const FieldFile file = read_field(analyze_file);
      const double c = speed_for(file, analyze_c_opt, analyze_c);
      emit(analyze_out, analysis_json(file.field, c).dump(2) + "\n");
      return 0;
    }

    if (morse_cmd->parsed()) {
      const FieldFile file = read_field(morse_file);
      const double c = speed_for(file, morse_c_opt, morse_c);
      MorseOptions opt;
      opt.cutoff = cutoff;
      emit(morse_out, to_json(morse_index(file.field, c, opt)).dump(2) + "\n");
      return 0;
    }

    if (scan_cmd->parsed()) {
      if (!(rho2 > 0)) throw ConfigError("--rho2 must be positive");
      const CircularParams p = make_circular(scan_c, std::sqrt(rho2));
      emit(scan_out, circular_scan_csv(circular_index_scan(p, parse_list(lengths), scan_h)));
      return 0;
    }

    if (soliton_cmd->parsed()) {
      const SolitonParams p{sol_c, sol_shift};
      const Grid g = line_grid(sol_n, sol_h);
      write_field(sol_out, sample_soliton(g, p), sol_c);
      return 0;
    }

    if (validate_cmd->parsed()) {
      const FieldFile file = read_field(validate_file);
      const double c = speed_for(file, validate_c_opt, validate_c);
      Json j = analysis_json(file.field, c);
      const bool passed = j.at("el_residual_max").get<double>() <= validate_tol;
      j["tolerance"] = validate_tol;
      j["passed"] = passed;
      emit(validate_out, j.dump(2) + "\n");
      return passed ? 0 : kExitNonConvergence;
    }
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DomainError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const NonConvergence& e) {
    std::cerr << "non-convergence: " << e.what() << "\n";
    return kExitNonConvergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
