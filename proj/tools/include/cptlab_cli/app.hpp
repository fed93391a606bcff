#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace cptlab::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNonConvergence = 3;
inline constexpr int kExitUsage = 64;

const std::vector<std::string>& subcommands();

struct RunOptions {
  std::optional<std::uint64_t> seed;  // overrides the config's "seed"
  std::string out_dir = "runs";
  int threads = 1;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

// Everything a run produces except the manifest. Pure function of
// (subcommand, config, seed); thread count never changes the numbers.
struct Outcome {
  nlohmann::json result;
  std::map<std::string, CsvTable> csv;  // file name -> table
  std::string summary;                  // human-readable table
  int exit_code = kExitOk;
};

// Throws SchemaError / cptlab::Error on invalid input, ConvergenceError on
// numeric failure.
Outcome execute(const std::string& subcommand, const nlohmann::json& config, std::uint64_t seed, int threads);

// FNV-1a 64-bit of subcommand, canonical config and seed, as 16 hex digits.
std::string run_id(const std::string& subcommand, const nlohmann::json& config, std::uint64_t seed);

struct RunReport {
  int exit_code = kExitOk;
  std::string run_dir;  // empty when nothing was written
  std::string message;
};

// Reads the config, executes, writes <out_dir>/<run id>/{manifest.json,
// result.json, *.csv} and prints the summary. Validation failures write
// nothing.
RunReport run(const std::string& subcommand, const std::string& config_path, const RunOptions& options);

// argv front end used by the executable.
int main_entry(int argc, char** argv);

}  // namespace cptlab::cli
