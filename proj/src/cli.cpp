#include "cssm/cli.hpp"

#include <fmt/format.h>

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <json.hpp>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace cssm::cli {

namespace {

using nlohmann::json;

Scheme parse_scheme(std::string_view s) {
  if (s == "lora") return Scheme::Lora;
  if (s == "iqcss") return Scheme::Iqcss;
  if (s == "dcrk") return Scheme::Dcrk;
  throw std::invalid_argument(fmt::format("unknown scheme '{}'", s));
}

ChannelKind parse_channel(std::string_view s) {
  if (s == "awgn") return ChannelKind::Awgn;
  if (s == "flat") return ChannelKind::Flat;
  if (s == "tu12") return ChannelKind::Tu12;
  throw std::invalid_argument(fmt::format("unknown channel '{}'", s));
}

Axis parse_axis(std::string_view s) {
  if (s == "snr") return Axis::SnrDb;
  if (s == "ebn0") return Axis::EbN0Db;
  throw std::invalid_argument(fmt::format("unknown axis '{}'", s));
}

Coherence parse_coherence(std::string_view s) {
  if (s == "auto") return Coherence::Auto;
  if (s == "on") return Coherence::On;
  if (s == "off") return Coherence::Off;
  throw std::invalid_argument(fmt::format("unknown coherent mode '{}'", s));
}

bool parse_on_off(std::string_view s) {
  if (s == "on") return true;
  if (s == "off") return false;
  throw std::invalid_argument(fmt::format("expected on|off, got '{}'", s));
}

ChannelKnowledge parse_knowledge(std::string_view s) {
  if (s == "ls") return ChannelKnowledge::Estimated;
  if (s == "perfect") return ChannelKnowledge::Perfect;
  throw std::invalid_argument(fmt::format("unknown channel estimate mode '{}'", s));
}

std::string normalize_key(std::string key) {
  for (auto& c : key) {
    if (c == '_') c = '-';
  }
  return key;
}

template <typename T>
T get_as(const json& v, const std::string& key) {
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw std::invalid_argument(fmt::format("config key '{}' has the wrong type", key));
  }
}

std::string resolve_profile(const std::string& profile) {
  if (profile.find('/') != std::string::npos) return profile;
  return (std::filesystem::path(profile_dir()) / profile).string();
}

std::string fmt_double(double v) { return fmt::format("{:.10g}", v); }

std::string csv_header(std::string_view command) { return fmt::format("# {} command={}\n", kCsvVersion, command); }

std::string sweep_prefix(const RunConfig& cfg, const PointResult& p) {
  const auto& s = cfg.sweep;
  return fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{}", to_string(s.scheme), s.sf,
                     s.scheme == Scheme::Dcrk ? s.ne : 0, to_string(s.channel), to_string(s.axis),
                     fmt_double(p.point_db), p.frames, p.symbols, p.bits, p.symbol_errors, p.bit_errors,
                     fmt_double(p.ser), fmt_double(p.ber), s.seed);
}

constexpr std::string_view kSweepColumns =
    "scheme,sf,ne,channel,axis,point_db,frames,symbols,bits,sym_errs,bit_errs,ser,ber,seed";

void write_output(const RunConfig& cfg, const std::string& csv, std::ostream& out) {
  if (cfg.out_path.empty()) {
    out << csv;
    return;
  }
  const std::string tmp = cfg.out_path + ".partial";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open output file " + cfg.out_path);
    f << csv;
    f.flush();
    if (!f) {
      std::remove(tmp.c_str());
      throw std::runtime_error("failed writing output file " + cfg.out_path);
    }
  }
  std::filesystem::rename(tmp, cfg.out_path);
}

}  // namespace

RunConfig default_config() {
  RunConfig cfg;
  cfg.sweep.points = parse_points("-14:2:-2");
  cfg.sweep.threads = std::max(1u, std::thread::hardware_concurrency());
  cfg.sweep.n_cp = 16;
  return cfg;
}

std::vector<double> parse_points(std::string_view text) {
  auto to_double = [](std::string_view s) {
    const std::string str(s);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(str, &used);
    } catch (const std::exception&) {
      throw std::invalid_argument(fmt::format("bad number '{}' in point grid", s));
    }
    if (used != str.size() || !std::isfinite(v)) throw std::invalid_argument(fmt::format("bad number '{}' in point grid", s));
    return v;
  };

  std::vector<double> points;
  if (text.find(':') != std::string_view::npos) {
    const auto c1 = text.find(':');
    const auto c2 = text.find(':', c1 + 1);
    if (c2 == std::string_view::npos || text.find(':', c2 + 1) != std::string_view::npos) {
      throw std::invalid_argument("point grid must be start:step:stop");
    }
    const double start = to_double(text.substr(0, c1));
    const double step = to_double(text.substr(c1 + 1, c2 - c1 - 1));
    const double stop = to_double(text.substr(c2 + 1));
    if (step == 0.0 || (stop - start) / step < 0.0) throw std::invalid_argument("point grid step has the wrong sign");
    const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
    if (count > 100000) throw std::invalid_argument("point grid too large");
    for (std::size_t i = 0; i < count; ++i) points.push_back(start + static_cast<double>(i) * step);
    return points;
  }
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto comma = text.find(',', pos);
    const auto item = text.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
    points.push_back(to_double(item));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  if (points.empty()) throw std::invalid_argument("empty point grid");
  return points;
}

void apply_config_text(std::string_view json_text, RunConfig& cfg) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw std::invalid_argument("config must be a JSON object");

  auto& s = cfg.sweep;
  const std::map<std::string, std::function<void(const json&, const std::string&)>> handlers = {
      {"scheme", [&](const json& v, const std::string& k) { s.scheme = parse_scheme(get_as<std::string>(v, k)); }},
      {"sf", [&](const json& v, const std::string& k) { s.sf = get_as<int>(v, k); }},
      {"ne", [&](const json& v, const std::string& k) { s.ne = get_as<int>(v, k); }},
      {"channel", [&](const json& v, const std::string& k) { s.channel = parse_channel(get_as<std::string>(v, k)); }},
      {"axis", [&](const json& v, const std::string& k) { s.axis = parse_axis(get_as<std::string>(v, k)); }},
      {"points",
       [&](const json& v, const std::string& k) {
         s.points = v.is_array() ? get_as<std::vector<double>>(v, k) : parse_points(get_as<std::string>(v, k));
       }},
      {"coherent", [&](const json& v, const std::string& k) { s.coherent = parse_coherence(get_as<std::string>(v, k)); }},
      {"block-fading",
       [&](const json& v, const std::string& k) {
         s.block_fading = v.is_boolean() ? v.get<bool>() : parse_on_off(get_as<std::string>(v, k));
       }},
      {"channel-est", [&](const json& v, const std::string& k) { s.knowledge = parse_knowledge(get_as<std::string>(v, k)); }},
      {"cp", [&](const json& v, const std::string& k) { s.n_cp = get_as<std::size_t>(v, k); }},
      {"l-taps", [&](const json& v, const std::string& k) { s.l_taps = get_as<std::size_t>(v, k); }},
      {"payload", [&](const json& v, const std::string& k) { s.payload_chirps = get_as<int>(v, k); }},
      {"preamble", [&](const json& v, const std::string& k) { s.preamble_up = get_as<int>(v, k); }},
      {"sfd", [&](const json& v, const std::string& k) { s.sfd_down = get_as<int>(v, k); }},
      {"frames-max", [&](const json& v, const std::string& k) { s.max_frames = get_as<std::uint64_t>(v, k); }},
      {"min-errors", [&](const json& v, const std::string& k) { s.min_errors = get_as<std::uint64_t>(v, k); }},
      {"seed", [&](const json& v, const std::string& k) { s.seed = get_as<std::uint64_t>(v, k); }},
      {"threads", [&](const json& v, const std::string& k) { s.threads = get_as<unsigned>(v, k); }},
      {"speed", [&](const json& v, const std::string& k) { cfg.speed_kmh = get_as<double>(v, k); }},
      {"carrier", [&](const json& v, const std::string& k) { cfg.carrier_hz = get_as<double>(v, k); }},
      {"bandwidth", [&](const json& v, const std::string& k) { cfg.bandwidth_hz = get_as<double>(v, k); }},
      {"profile", [&](const json& v, const std::string& k) { cfg.profile = get_as<std::string>(v, k); }},
      {"m1", [&](const json& v, const std::string& k) { cfg.xcorr_m1 = get_as<int>(v, k); }},
      {"max-rate", [&](const json& v, const std::string& k) { cfg.xcorr_max_rate = get_as<int>(v, k); }},
      {"out", [&](const json& v, const std::string& k) { cfg.out_path = get_as<std::string>(v, k); }},
  };
  for (const auto& [raw_key, value] : doc.items()) {
    const auto key = normalize_key(raw_key);
    const auto it = handlers.find(key);
    if (it == handlers.end()) throw std::invalid_argument(fmt::format("unknown config key '{}'", raw_key));
    it->second(value, raw_key);
  }
}

void apply_config_file(const std::string& path, RunConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  apply_config_text(buf.str(), cfg);
}

std::string profile_dir() {
  if (const char* env = std::getenv("CSSM_PROFILE_DIR"); env != nullptr && *env != '\0') return env;
  return CSSM_PROFILE_DIR_DEFAULT;
}

void finalize(RunConfig& cfg) {
  if (!(cfg.bandwidth_hz > 0.0)) throw std::invalid_argument("bandwidth must be positive");
  if (!(cfg.carrier_hz > 0.0)) throw std::invalid_argument("carrier frequency must be positive");
  const double doppler = doppler_from_mobility(cfg.speed_kmh, cfg.carrier_hz);
  auto& s = cfg.sweep;
  if (s.channel == ChannelKind::Tu12) {
    s.fading = load_profile_file(resolve_profile(cfg.profile), cfg.bandwidth_hz, doppler);
  } else {
    s.fading = FadingSpec{doppler, cfg.bandwidth_hz, {{0, 0.0}}};
  }
  if (cfg.command == "xcorr") {
    ChirpParams(s.sf);  // range check only
    if (cfg.xcorr_max_rate < 1) throw std::invalid_argument("max-rate must be at least 1");
    if (cfg.xcorr_m1 == 0) throw std::invalid_argument("m1 must be non-zero");
    return;
  }
  if (s.points.empty()) throw std::invalid_argument("no sweep points");
  s.validate();
}

std::string csv_ber_sweep(const RunConfig& cfg) {
  const auto result = run_sweep(cfg.sweep);
  std::string csv = csv_header("ber-sweep");
  csv += fmt::format("{}\n", kSweepColumns);
  for (const auto& p : result.points) csv += sweep_prefix(cfg, p) + "\n";
  return csv;
}

std::string csv_throughput(const RunConfig& cfg) {
  const auto result = run_sweep(cfg.sweep);
  std::string csv = csv_header("throughput");
  csv += fmt::format("{},throughput_bps\n", kSweepColumns);
  for (const auto& p : result.points) csv += fmt::format("{},{}\n", sweep_prefix(cfg, p), fmt_double(p.throughput_bps));
  return csv;
}

std::string csv_energy(const RunConfig& cfg) {
  const auto result = run_sweep(cfg.sweep);
  std::string csv = csv_header("energy");
  csv += fmt::format("{},ebn0_db,energy_per_useful_bit_es\n", kSweepColumns);
  for (const auto& p : result.points) {
    csv += fmt::format("{},{},{}\n", sweep_prefix(cfg, p), fmt_double(p.ebn0_db), fmt_double(p.energy_per_useful_bit));
  }
  return csv;
}

std::string csv_xcorr(const RunConfig& cfg) {
  const std::size_t n = ChirpParams(cfg.sweep.sf).n();
  std::string csv = csv_header("xcorr");
  csv += "sf,m1,m2,inner_product,normalized\n";
  for (int m2 = -cfg.xcorr_max_rate; m2 <= cfg.xcorr_max_rate; ++m2) {
    if (m2 == 0) continue;
    const double v = cross_rate_inner_product(n, cfg.xcorr_m1, m2);
    csv += fmt::format("{},{},{},{},{}\n", cfg.sweep.sf, cfg.xcorr_m1, m2, fmt_double(v),
                       fmt_double(v / static_cast<double>(n)));
  }
  return csv;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Chirp spread spectrum link simulator"};
  app.require_subcommand(1);

  struct Flags {
    std::string scheme, channel, axis, points, coherent, block_fading, channel_est, profile, config, out;
    int sf = 0, ne = 0, payload = 0, m1 = 0, max_rate = 0;
    std::size_t cp = 0, l_taps = 0;
    std::uint64_t frames_max = 0, min_errors = 0, seed = 0;
    unsigned threads = 0;
    double speed = 0, carrier = 0, bandwidth = 0;
  } flags;

  std::vector<std::function<void(RunConfig&)>> overrides;
  auto add_common = [&](CLI::App* sub, bool sweep) {
    auto opt = [&](const std::string& name, auto& target, const std::string& help, auto apply) {
      auto* o = sub->add_option(name, target, help);
      overrides.push_back([o, apply](RunConfig& cfg) {
        if (o->count() > 0) apply(cfg);
      });
      return o;
    };
    opt("--sf", flags.sf, "spreading factor (6-12)", [&](RunConfig& c) { c.sweep.sf = flags.sf; });
    opt("--config", flags.config, "JSON configuration file", [](RunConfig&) {});
    opt("--out", flags.out, "output CSV path (default: stdout)", [&](RunConfig& c) { c.out_path = flags.out; });
    if (!sweep) {
      opt("--m1", flags.m1, "reference chirp rate", [&](RunConfig& c) { c.xcorr_m1 = flags.m1; });
      opt("--max-rate", flags.max_rate, "largest |m2| tabulated", [&](RunConfig& c) { c.xcorr_max_rate = flags.max_rate; });
      return;
    }
    opt("--scheme", flags.scheme, "lora|iqcss|dcrk", [&](RunConfig& c) { c.sweep.scheme = parse_scheme(flags.scheme); });
    opt("--ne", flags.ne, "DCRK chirp-rate bits (1-3)", [&](RunConfig& c) { c.sweep.ne = flags.ne; });
    opt("--channel", flags.channel, "awgn|flat|tu12", [&](RunConfig& c) { c.sweep.channel = parse_channel(flags.channel); });
    opt("--axis", flags.axis, "snr|ebn0", [&](RunConfig& c) { c.sweep.axis = parse_axis(flags.axis); });
    opt("--points", flags.points, "start:step:stop or comma list (dB)",
        [&](RunConfig& c) { c.sweep.points = parse_points(flags.points); })
        ->allow_extra_args(false);
    opt("--coherent", flags.coherent, "auto|on|off", [&](RunConfig& c) { c.sweep.coherent = parse_coherence(flags.coherent); });
    opt("--block-fading", flags.block_fading, "on|off",
        [&](RunConfig& c) { c.sweep.block_fading = parse_on_off(flags.block_fading); });
    opt("--channel-est", flags.channel_est, "ls|perfect",
        [&](RunConfig& c) { c.sweep.knowledge = parse_knowledge(flags.channel_est); });
    opt("--cp", flags.cp, "cyclic prefix samples", [&](RunConfig& c) { c.sweep.n_cp = flags.cp; });
    opt("--l-taps", flags.l_taps, "estimated channel taps (0: auto)", [&](RunConfig& c) { c.sweep.l_taps = flags.l_taps; });
    opt("--payload", flags.payload, "payload chirps per frame", [&](RunConfig& c) { c.sweep.payload_chirps = flags.payload; });
    opt("--frames-max", flags.frames_max, "frame limit per point", [&](RunConfig& c) { c.sweep.max_frames = flags.frames_max; });
    opt("--min-errors", flags.min_errors, "symbol errors per point", [&](RunConfig& c) { c.sweep.min_errors = flags.min_errors; });
    opt("--seed", flags.seed, "master RNG seed", [&](RunConfig& c) { c.sweep.seed = flags.seed; });
    opt("--threads", flags.threads, "worker threads", [&](RunConfig& c) { c.sweep.threads = flags.threads; });
    opt("--speed", flags.speed, "mobile speed (km/h)", [&](RunConfig& c) { c.speed_kmh = flags.speed; });
    opt("--carrier", flags.carrier, "carrier frequency (Hz)", [&](RunConfig& c) { c.carrier_hz = flags.carrier; });
    opt("--bandwidth", flags.bandwidth, "bandwidth (Hz)", [&](RunConfig& c) { c.bandwidth_hz = flags.bandwidth; });
    opt("--profile", flags.profile, "channel profile file", [&](RunConfig& c) { c.profile = flags.profile; });
  };

  std::map<CLI::App*, std::string> names;
  for (const auto& [name, help, sweep] : {std::tuple{"ber-sweep", "BER/SER versus SNR or Eb/N0", true},
                                          std::tuple{"throughput", "effective throughput versus SNR", true},
                                          std::tuple{"energy", "effective energy per useful bit", true},
                                          std::tuple{"xcorr", "inner product versus dechirping rate", false}}) {
    auto* sub = app.add_subcommand(name, help);
    names[sub] = name;
    add_common(sub, sweep);
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    RunConfig cfg = default_config();
    for (auto* sub : app.get_subcommands()) cfg.command = names.at(sub);
    if (!flags.config.empty()) apply_config_file(flags.config, cfg);
    for (const auto& apply : overrides) apply(cfg);
    finalize(cfg);

    std::string csv;
    if (cfg.command == "ber-sweep") csv = csv_ber_sweep(cfg);
    else if (cfg.command == "throughput") csv = csv_throughput(cfg);
    else if (cfg.command == "energy") csv = csv_energy(cfg);
    else csv = csv_xcorr(cfg);
    write_output(cfg, csv, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace cssm::cli
