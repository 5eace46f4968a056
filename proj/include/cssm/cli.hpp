#pragma once

// Command-line front end: run configuration, sweeps and CSV emission.

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "cssm/simkit.hpp"

namespace cssm::cli {

inline constexpr std::string_view kCsvVersion = "cssm-csv v1";

/// Defaults mirror the reference setup: B = 250 kHz, fc = 863 MHz, 3 km/h,
/// CP = 16, 30-chirp payload after 10 up-chirps and 2 SFD chirps.
struct RunConfig {
  std::string command;
  SweepSpec sweep;
  double speed_kmh = 3.0;
  double carrier_hz = 863e6;
  double bandwidth_hz = 250e3;
  std::string profile = "tu12.txt";
  int xcorr_m1 = 5;
  int xcorr_max_rate = 8;
  std::string out_path;  ///< empty writes to the given stream
};

RunConfig default_config();

/// "start:step:stop" (inclusive) or a comma-separated list of dB values.
std::vector<double> parse_points(std::string_view text);

/// Applies a JSON object; keys match the long flag names with '-' or '_'.
/// Unknown keys and ill-typed values throw std::invalid_argument.
void apply_config_text(std::string_view json_text, RunConfig& cfg);
void apply_config_file(const std::string& path, RunConfig& cfg);

/// Resolves derived settings (Doppler, fading profile) and validates.
void finalize(RunConfig& cfg);

/// Directory searched for channel profile files: $CSSM_PROFILE_DIR, else the
/// data directory of the source tree.
std::string profile_dir();

std::string csv_ber_sweep(const RunConfig& cfg);
std::string csv_throughput(const RunConfig& cfg);
std::string csv_energy(const RunConfig& cfg);
std::string csv_xcorr(const RunConfig& cfg);

/// Full command-line entry point; args exclude the program name. Returns the
/// process exit code. Output goes to --out when given, otherwise to out.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cssm::cli
