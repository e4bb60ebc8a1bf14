#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "gpwaves/analysis.hpp"
#include "gpwaves/field.hpp"
#include "gpwaves/functionals.hpp"
#include "gpwaves/morse.hpp"
#include "gpwaves/solver.hpp"

namespace gpwaves {

using Json = nlohmann::ordered_json;

std::string tool_version();
std::string source_id();

// ---- GPWF binary fields ----

struct FieldFile {
  Field field;
  double c = std::numeric_limits<double>::quiet_NaN();  ///< NaN when the field has no speed
};

/// Little-endian GPWF version 1 encoding.
std::vector<std::uint8_t> encode_field(const Field& f, double c = std::numeric_limits<double>::quiet_NaN());

/// Throws IoError naming the byte offset of the first malformed or missing byte.
FieldFile decode_field(const std::vector<std::uint8_t>& bytes);

void write_field(const std::string& path, const Field& f, double c = std::numeric_limits<double>::quiet_NaN());
FieldFile read_field(const std::string& path);

// ---- files ----

/// Writes to a temporary file in the same directory, then renames it over `path`.
void atomic_write(const std::string& path, const std::string& contents);
void atomic_write(const std::string& path, const std::vector<std::uint8_t>& contents);
std::vector<std::uint8_t> read_bytes(const std::string& path);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(const std::uint8_t* data, std::size_t size);
/// FNV-1a of a file's bytes as 16 lowercase hex digits.
std::string file_hash(const std::string& path);

// ---- text formats ----

/// %.17g; NaN and infinities as "nan", "inf", "-inf".
std::string format_double(double v);

/// key=value lines; '#' starts a comment; blank lines ignored. Throws ConfigError on a line
/// without '=' and IoError when the file cannot be read.
std::map<std::string, std::string> parse_key_values(const std::string& text);
std::map<std::string, std::string> read_config_file(const std::string& path);

/// Sets one SolverConfig entry from text. Throws ConfigError on unknown keys or bad values.
void apply_config_value(SolverConfig& cfg, const std::string& key, const std::string& value);

TransverseBc parse_bc(const std::string& text);

// ---- JSON ----

Json to_json(const SolverConfig& cfg);
SolverConfig solver_config_from_json(const Json& j);
Json to_json(const FunctionalReport& r);
Json to_json(const SpectrumReport& r);
Json to_json(const VortexSet& v);
Json to_json(const SolveReport& r);
/// Residual suite for a field: functionals, EL residual, Pohozaev, lifting identities, vortices,
/// sublevel measures at r = 0.1, ..., 0.9 and the decay fit.
Json analysis_json(const Field& f, double c);

std::string sweep_csv(const SweepTable& t);
Json to_json(const SweepTable& t);
std::string path_profile_csv(const std::vector<double>& profile);
std::string circular_scan_csv(const std::vector<CircularScanRow>& rows);

// ---- run manifest ----

struct RunManifest {
  std::string tool_version;
  std::string source_id;
  std::string command;  ///< "solve" or "sweep"
  SolverConfig config;
  std::vector<double> c_values;  ///< sweep only
  std::vector<double> N_values;  ///< sweep only
  std::string created_at;        ///< UTC, ISO 8601
  std::string finished_at;
  std::map<std::string, std::string> input_hashes;
  std::map<std::string, std::string> output_hashes;
};

Json to_json(const RunManifest& m);
RunManifest run_manifest_from_json(const Json& j);

std::string utc_timestamp();

}  // namespace gpwaves
