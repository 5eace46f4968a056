#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "cssm/cli.hpp"

using namespace cssm;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run_cli(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> fields;
  std::istringstream in(line);
  for (std::string f; std::getline(in, f, ',');) fields.push_back(f);
  return fields;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("cssm_test_" + std::to_string(::getpid()) + "_" + name);
}

}  // namespace

TEST_CASE("point grids") {
  CHECK(cli::parse_points("-14:2:-2") == std::vector<double>{-14, -12, -10, -8, -6, -4, -2});
  CHECK(cli::parse_points("0:0.5:1") == std::vector<double>{0, 0.5, 1});
  CHECK(cli::parse_points("5:-5:-5") == std::vector<double>{5, 0, -5});
  CHECK(cli::parse_points("3") == std::vector<double>{3});
  CHECK(cli::parse_points("1,2.5,-4") == std::vector<double>{1, 2.5, -4});
  CHECK(cli::parse_points("0:0.1:0.3").size() == 4);
  CHECK_THROWS_AS(cli::parse_points(""), std::invalid_argument);
  CHECK_THROWS_AS(cli::parse_points("0:1"), std::invalid_argument);
  CHECK_THROWS_AS(cli::parse_points("0:0:4"), std::invalid_argument);
  CHECK_THROWS_AS(cli::parse_points("0:-1:4"), std::invalid_argument);
  CHECK_THROWS_AS(cli::parse_points("1,x"), std::invalid_argument);
  CHECK_THROWS_AS(cli::parse_points("1,,2"), std::invalid_argument);
  CHECK_THROWS_AS(cli::parse_points("nan"), std::invalid_argument);
}

TEST_CASE("defaults mirror the reference setup") {
  const auto cfg = cli::default_config();
  CHECK(cfg.bandwidth_hz == 250e3);
  CHECK(cfg.carrier_hz == 863e6);
  CHECK(cfg.speed_kmh == 3.0);
  CHECK(cfg.sweep.n_cp == 16);
  CHECK(cfg.sweep.payload_chirps == 30);
  CHECK(cfg.sweep.preamble_up == 10);
  CHECK(cfg.sweep.sfd_down == 2);
  CHECK(cfg.sweep.min_errors == 200);
  CHECK(cfg.sweep.max_frames == 200000);
  CHECK(cfg.sweep.threads >= 1);
}

TEST_CASE("JSON configuration") {
  auto cfg = cli::default_config();
  cli::apply_config_text(R"({"scheme": "dcrk", "sf": 9, "ne": 3, "channel": "tu12", "block_fading": true,
                            "points": [1, 2], "frames-max": 10, "seed": 99, "channel_est": "perfect",
                            "speed": 6.0, "coherent": "off", "l-taps": 4})",
                         cfg);
  CHECK(cfg.sweep.scheme == Scheme::Dcrk);
  CHECK(cfg.sweep.sf == 9);
  CHECK(cfg.sweep.ne == 3);
  CHECK(cfg.sweep.channel == ChannelKind::Tu12);
  CHECK(cfg.sweep.block_fading);
  CHECK(cfg.sweep.points == std::vector<double>{1, 2});
  CHECK(cfg.sweep.max_frames == 10);
  CHECK(cfg.sweep.seed == 99);
  CHECK(cfg.sweep.knowledge == ChannelKnowledge::Perfect);
  CHECK(cfg.speed_kmh == 6.0);
  CHECK(cfg.sweep.coherent == Coherence::Off);
  CHECK(cfg.sweep.l_taps == 4);

  cli::apply_config_text(R"({"points": "-4:2:0", "block-fading": "off"})", cfg);
  CHECK(cfg.sweep.points == std::vector<double>{-4, -2, 0});
  CHECK_FALSE(cfg.sweep.block_fading);

  CHECK_THROWS_AS(cli::apply_config_text(R"({"bogus": 1})", cfg), std::invalid_argument);
  CHECK_THROWS_AS(cli::apply_config_text(R"({"sf": "nine"})", cfg), std::invalid_argument);
  CHECK_THROWS_AS(cli::apply_config_text(R"({"scheme": "fsk"})", cfg), std::invalid_argument);
  CHECK_THROWS_AS(cli::apply_config_text(R"([1, 2])", cfg), std::invalid_argument);
  CHECK_THROWS_AS(cli::apply_config_text("{", cfg), std::invalid_argument);
  CHECK_THROWS_AS(cli::apply_config_file("/nonexistent/cfg.json", cfg), std::invalid_argument);
}

TEST_CASE("finalize resolves Doppler and the TU-12 profile") {
  auto cfg = cli::default_config();
  cfg.command = "ber-sweep";
  cfg.sweep.channel = ChannelKind::Tu12;
  cli::finalize(cfg);
  CHECK(cfg.sweep.fading.profile.size() == 2);
  CHECK(cfg.sweep.fading.doppler_hz == doctest::Approx(doppler_from_mobility(3.0, 863e6)));
  CHECK(cfg.sweep.fading.sample_rate_hz == 250e3);

  cfg.profile = "missing.txt";
  CHECK_THROWS(cli::finalize(cfg));

  auto flat = cli::default_config();
  flat.command = "ber-sweep";
  flat.sweep.channel = ChannelKind::Flat;
  flat.speed_kmh = 0.0;
  cli::finalize(flat);
  CHECK(flat.sweep.fading.is_flat());
  CHECK(flat.sweep.fading.doppler_hz == 0.0);
}

TEST_CASE("ber-sweep output") {
  const std::vector<std::string> args{"ber-sweep", "--scheme", "lora", "--sf", "6", "--channel", "awgn",
                                      "--axis",    "snr",      "--points", "-14:2:-2", "--frames-max", "4",
                                      "--threads", "2"};
  const auto a = run_cli(args);
  REQUIRE(a.code == 0);
  CHECK(a.err.empty());
  const auto lines = lines_of(a.out);
  REQUIRE(lines.size() == 9);
  CHECK(lines[0] == "# cssm-csv v1 command=ber-sweep");
  CHECK(lines[1] == "scheme,sf,ne,channel,axis,point_db,frames,symbols,bits,sym_errs,bit_errs,ser,ber,seed");
  const auto first = split(lines[2]);
  REQUIRE(first.size() == 14);
  CHECK(first[0] == "lora");
  CHECK(first[5] == "-14");
  CHECK(first[6] == "4");
  CHECK(first[7] == "120");
  CHECK(first[8] == "720");

  const auto b = run_cli(args);
  CHECK(a.out == b.out);

  auto single_thread = args;
  single_thread.back() = "1";
  CHECK(run_cli(single_thread).out == a.out);
}

TEST_CASE("flag overrides config file") {
  const auto cfg_path = temp_path("cfg.json");
  {
    std::ofstream f(cfg_path);
    f << R"({"scheme": "iqcss", "sf": 7, "points": "0", "frames_max": 2, "seed": 5})";
  }
  const auto from_file = run_cli({"ber-sweep", "--config", cfg_path.string()});
  REQUIRE(from_file.code == 0);
  const auto row = split(lines_of(from_file.out).at(2));
  CHECK(row[0] == "iqcss");
  CHECK(row[1] == "7");
  CHECK(row[13] == "5");

  const auto overridden = run_cli({"ber-sweep", "--config", cfg_path.string(), "--sf", "6", "--seed", "11"});
  REQUIRE(overridden.code == 0);
  const auto row2 = split(lines_of(overridden.out).at(2));
  CHECK(row2[0] == "iqcss");
  CHECK(row2[1] == "6");
  CHECK(row2[13] == "11");
  std::filesystem::remove(cfg_path);

  const auto bad = run_cli({"ber-sweep", "--config", "/nonexistent/cfg.json"});
  CHECK(bad.code != 0);
  CHECK_FALSE(bad.err.empty());
}

TEST_CASE("throughput and energy columns") {
  const auto t = run_cli({"throughput", "--scheme", "dcrk", "--ne", "3", "--sf", "6", "--points", "40",
                          "--frames-max", "16"});
  REQUIRE(t.code == 0);
  auto lines = lines_of(t.out);
  CHECK(lines[0] == "# cssm-csv v1 command=throughput");
  CHECK(split(lines[1]).back() == "throughput_bps");
  CHECK(std::stod(split(lines[2]).back()) == doctest::Approx(9 * 250e3 / 64));

  const auto e = run_cli({"energy", "--scheme", "iqcss", "--sf", "6", "--axis", "ebn0", "--points", "30",
                          "--frames-max", "16"});
  REQUIRE(e.code == 0);
  lines = lines_of(e.out);
  const auto header = split(lines[1]);
  CHECK(header[header.size() - 2] == "ebn0_db");
  CHECK(header.back() == "energy_per_useful_bit_es");
  const auto row = split(lines[2]);
  CHECK(std::stod(row[row.size() - 2]) == doctest::Approx(30.0));
  CHECK(std::stod(row.back()) == doctest::Approx(1.0 / 12));
}

TEST_CASE("xcorr output") {
  const auto r = run_cli({"xcorr", "--sf", "6", "--m1", "5", "--max-rate", "4"});
  REQUIRE(r.code == 0);
  const auto lines = lines_of(r.out);
  REQUIRE(lines.size() == 2 + 8);
  CHECK(lines[1] == "sf,m1,m2,inner_product,normalized");
  int m2 = -4;
  for (std::size_t i = 2; i < lines.size(); ++i, ++m2) {
    if (m2 == 0) ++m2;
    const auto row = split(lines[i]);
    CHECK(std::stoi(row[2]) == m2);
    CHECK(std::stod(row[3]) == doctest::Approx(cross_rate_inner_product(64, 5, m2)).epsilon(1e-9));
    CHECK(std::stod(row[4]) == doctest::Approx(cross_rate_inner_product(64, 5, m2) / 64).epsilon(1e-9));
  }
  const auto peak = run_cli({"xcorr", "--sf", "12", "--max-rate", "5"});
  CHECK(split(lines_of(peak.out).back())[3] == "4096");
}

TEST_CASE("output file is written only on success") {
  const auto path = temp_path("out.csv");
  std::filesystem::remove(path);
  const auto ok = run_cli({"xcorr", "--sf", "6", "--out", path.string()});
  REQUIRE(ok.code == 0);
  CHECK(ok.out.empty());
  std::ifstream in(path);
  std::stringstream content;
  content << in.rdbuf();
  CHECK(content.str().rfind("# cssm-csv v1 command=xcorr", 0) == 0);
  std::filesystem::remove(path);

  const auto bad = run_cli({"ber-sweep", "--scheme", "iqcss", "--coherent", "off", "--points", "0", "--out",
                            path.string()});
  CHECK(bad.code != 0);
  CHECK(bad.err.find("IQCSS") != std::string::npos);
  CHECK_FALSE(std::filesystem::exists(path));
}

TEST_CASE("invalid invocations fail with a message") {
  for (const auto& args : std::vector<std::vector<std::string>>{
           {},
           {"bogus"},
           {"ber-sweep", "--scheme", "fsk"},
           {"ber-sweep", "--sf", "13"},
           {"ber-sweep", "--channel", "rician"},
           {"ber-sweep", "--points", "1:0:2"},
           {"ber-sweep", "--block-fading", "maybe"},
           {"ber-sweep", "--scheme", "dcrk", "--ne", "4"},
           {"ber-sweep", "--scheme", "dcrk", "--channel", "tu12", "--coherent", "on"},
           {"ber-sweep", "--min-errors", "0"},
           {"ber-sweep", "--cp", "64", "--sf", "6"},
           {"xcorr", "--sf", "6", "--scheme", "lora"},
       }) {
    const auto r = run_cli(args);
    CAPTURE(args.size());
    CHECK(r.code != 0);
    CHECK_FALSE(r.err.empty());
  }
}

TEST_CASE("profile directory follows the environment") {
  const char* env = std::getenv("CSSM_PROFILE_DIR");
  if (env != nullptr) CHECK(cli::profile_dir() == env);
  ::setenv("CSSM_PROFILE_DIR", "/tmp/somewhere", 1);
  CHECK(cli::profile_dir() == "/tmp/somewhere");
  ::unsetenv("CSSM_PROFILE_DIR");
  CHECK(std::filesystem::exists(std::filesystem::path(cli::profile_dir()) / "tu12.txt"));
  if (env != nullptr) ::setenv("CSSM_PROFILE_DIR", env, 1);
}
