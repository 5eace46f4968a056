#include "cssm/simkit.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>

namespace cssm {

std::string_view to_string(ChannelKind c) {
  switch (c) {
    case ChannelKind::Awgn: return "awgn";
    case ChannelKind::Flat: return "flat";
    case ChannelKind::Tu12: return "tu12";
  }
  return "unknown";
}

std::string_view to_string(Axis a) { return a == Axis::SnrDb ? "snr" : "ebn0"; }

void SweepSpec::validate() const {
  const ChirpParams p(sf);
  frame_config().validate(p.n());
  if (scheme == Scheme::Dcrk) num_rates(ne);
  for (double v : points) {
    if (!std::isfinite(v)) throw std::invalid_argument("sweep points must be finite");
  }
  if (min_errors < 1) throw std::invalid_argument("min_errors must be at least 1");
  if (max_frames < 1) throw std::invalid_argument("max_frames must be at least 1");
  if (threads < 1) throw std::invalid_argument("threads must be at least 1");
  if (scheme == Scheme::Iqcss && coherent == Coherence::Off) {
    throw std::invalid_argument("IQCSS needs coherent detection and a channel estimator");
  }
  if (scheme == Scheme::Dcrk && coherent == Coherence::On && channel == ChannelKind::Tu12) {
    throw std::invalid_argument("coherent DCRK detection is defined for flat channels only");
  }
  if (uses_coherent_detection() && knowledge == ChannelKnowledge::Estimated && preamble_up < 1) {
    throw std::invalid_argument("channel estimation needs at least one preamble up-chirp");
  }
  if (channel != ChannelKind::Awgn) fading.validate();
  if (channel == ChannelKind::Tu12 && uses_coherent_detection()) {
    const auto l = effective_l_taps();
    if (l < 1 || l > n_cp + 1) throw std::invalid_argument("l_taps must be in [1, n_cp + 1]");
  }
}

FrameConfig SweepSpec::frame_config() const {
  FrameConfig cfg;
  cfg.preamble_up = preamble_up;
  cfg.sfd_down = sfd_down;
  cfg.payload_chirps = payload_chirps;
  cfg.n_cp = n_cp;
  cfg.scheme = scheme;
  cfg.ne = scheme == Scheme::Dcrk ? ne : 0;
  return cfg;
}

bool SweepSpec::uses_coherent_detection() const {
  switch (scheme) {
    case Scheme::Iqcss: return coherent != Coherence::Off;
    case Scheme::Lora:
    case Scheme::Dcrk: return coherent == Coherence::On;
  }
  return false;
}

std::size_t SweepSpec::effective_l_taps() const {
  return l_taps != 0 ? l_taps : std::min<std::size_t>(16, n_cp + 1);
}

double spreading_gain_db(int sf) {
  const ChirpParams p(sf);
  return 10.0 * std::log10(static_cast<double>(p.n()) / sf);
}

double snr_axis_convert(double value_db, AxisDirection direction, int sf, int n_b) {
  if (n_b < 1) throw std::invalid_argument("bits per chirp must be positive");
  const ChirpParams p(sf);
  const double offset = 10.0 * std::log10(static_cast<double>(p.n()) / n_b);
  return direction == AxisDirection::SnrToEbN0 ? value_db + offset : value_db - offset;
}

double throughput(int n_b, double b_hz, std::size_t n, double ber) {
  if (ber < 0.0 || ber > 1.0) throw std::invalid_argument("BER must be in [0, 1]");
  return n_b * b_hz / static_cast<double>(n) * (1.0 - ber);
}

double energy_per_useful_bit(double es, int n_b, double ber) {
  if (ber < 0.0 || ber > 1.0) throw std::invalid_argument("BER must be in [0, 1]");
  if (ber == 1.0) throw std::domain_error("no useful bits at BER = 1");
  return es / (n_b * (1.0 - ber));
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

double snr_of_point(const SweepSpec& spec, double point_db) {
  return spec.axis == Axis::SnrDb
             ? point_db
             : snr_axis_convert(point_db, AxisDirection::EbN0ToSnr, spec.sf, spec.bits_per_chirp());
}

FadingSpec channel_fading(const SweepSpec& spec) {
  FadingSpec f = spec.fading;
  if (spec.channel == ChannelKind::Flat) f.profile = {{0, 0.0}};
  return f;
}

std::uint64_t count_bit_errors(const BitWord& a, const BitWord& b) {
  std::uint64_t errors = 0;
  for (std::size_t i = 0; i < a.size(); ++i) errors += a[i] != b[i];
  return errors;
}

}  // namespace

std::uint64_t frame_seed(std::uint64_t master, std::uint64_t point_index, std::uint64_t frame_index) {
  return splitmix64(splitmix64(splitmix64(master) ^ point_index) ^ frame_index);
}

FrameOutcome simulate_frame(const SweepSpec& spec, double snr_db, std::uint64_t seed) {
  const ChirpParams p(spec.sf, 1, static_cast<double>(std::size_t{1} << spec.sf));
  const std::size_t n = p.n();
  const FrameConfig cfg = spec.frame_config();
  const int n_b = spec.bits_per_chirp();
  Rng rng(seed);

  // Payload bits, channel seed and noise are drawn in a fixed order so runs
  // that differ only in receiver knowledge see identical frames.
  BitWord bits(static_cast<std::size_t>(n_b) * static_cast<std::size_t>(cfg.payload_chirps));
  for (std::size_t i = 0; i < bits.size(); i += 64) {
    const std::uint64_t word = rng();
    for (std::size_t b = 0; b < 64 && i + b < bits.size(); ++b) bits[i + b] = (word >> b) & 1u;
  }
  const auto payload = payload_from_bits(cfg, spec.sf, bits);
  auto rx = build_frame(cfg, payload, p);
  const std::uint64_t channel_seed = rng();

  std::optional<ChannelRealization> realization;
  if (spec.channel != ChannelKind::Awgn) {
    const auto mode = spec.block_fading ? FadingMode::Block : FadingMode::Continuous;
    realization = realize_channel(channel_fading(spec), rx.size(), channel_seed, mode);
    rx = apply_channel(rx, *realization);
  }
  const double sigma2 = (p.es() / static_cast<double>(n)) * std::pow(10.0, -snr_db / 10.0);
  add_awgn(rx, {sigma2}, rng);

  const auto parsed = parse_frame(rx, cfg, p);
  const bool coherent = spec.uses_coherent_detection();
  const bool selective = spec.channel == ChannelKind::Tu12;

  DetectorMode estimated = NonCoherent{};
  if (coherent && spec.knowledge == ChannelKnowledge::Estimated) {
    if (selective) {
      estimated = CoherentSelective{ls_selective(parsed.preamble, spec.effective_l_taps(), cfg.n_cp)};
    } else {
      estimated = CoherentFlat{ls_flat(parsed.preamble)};
    }
  }

  const std::size_t stride = n + cfg.n_cp;
  const auto first_payload = static_cast<std::size_t>(cfg.preamble_up + cfg.sfd_down);
  auto detector_for = [&](std::size_t chirp) -> DetectorMode {
    if (!coherent) return NonCoherent{};
    if (spec.knowledge == ChannelKnowledge::Estimated) return estimated;
    if (!realization) return CoherentFlat{cplx{1.0, 0.0}};
    const std::size_t mid = (first_payload + chirp) * stride + cfg.n_cp + n / 2;
    auto h = realization->impulse_response(mid);
    if (selective) return CoherentSelective{std::move(h)};
    return CoherentFlat{h.front()};
  };

  FrameOutcome out;
  for (std::size_t i = 0; i < parsed.payload.size(); ++i) {
    const auto& y = parsed.payload[i];
    const auto mode = detector_for(i);
    PayloadSymbol decided;
    switch (spec.scheme) {
      case Scheme::Lora: decided = css_demod(y, p, mode).symbol; break;
      case Scheme::Iqcss: decided = iqcss_demod(y, p, mode).symbol; break;
      case Scheme::Dcrk: decided = dcrk_demod(y, p, spec.ne, mode).symbol; break;
    }
    const auto& sent = payload.symbols[i];
    const auto got_bits = symbol_bits(decided, spec.sf, cfg.ne);
    const auto sent_bits = symbol_bits(sent, spec.sf, cfg.ne);
    out.symbols += 1;
    out.bits += sent_bits.size();
    out.symbol_errors += decided != sent;
    out.bit_errors += count_bit_errors(sent_bits, got_bits);
  }
  return out;
}

SweepResult run_sweep(const SweepSpec& spec) {
  spec.validate();
  SweepResult result{spec, {}};
  const int n_b = spec.bits_per_chirp();
  const std::size_t n = std::size_t{1} << spec.sf;

  for (std::size_t pi = 0; pi < spec.points.size(); ++pi) {
    PointResult pr;
    pr.point_db = spec.points[pi];
    pr.snr_db = snr_of_point(spec, pr.point_db);
    pr.ebn0_db = snr_axis_convert(pr.snr_db, AxisDirection::SnrToEbN0, spec.sf, n_b);

    while (pr.symbol_errors < spec.min_errors && pr.frames < spec.max_frames) {
      const std::uint64_t batch = std::min(kFramesPerBatch, spec.max_frames - pr.frames);
      std::vector<FrameOutcome> outcomes(batch);
      auto work = [&](unsigned worker, unsigned stride) {
        for (std::uint64_t f = worker; f < batch; f += stride) {
          outcomes[f] = simulate_frame(spec, pr.snr_db, frame_seed(spec.seed, pi, pr.frames + f));
        }
      };
      const unsigned workers = static_cast<unsigned>(std::min<std::uint64_t>(spec.threads, batch));
      if (workers <= 1) {
        work(0, 1);
      } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work, w, workers);
        work(0, workers);
      }
      for (const auto& o : outcomes) {
        pr.symbols += o.symbols;
        pr.bits += o.bits;
        pr.symbol_errors += o.symbol_errors;
        pr.bit_errors += o.bit_errors;
      }
      pr.frames += batch;
    }

    pr.ser = pr.symbols ? static_cast<double>(pr.symbol_errors) / static_cast<double>(pr.symbols) : 0.0;
    pr.ber = pr.bits ? static_cast<double>(pr.bit_errors) / static_cast<double>(pr.bits) : 0.0;
    pr.throughput_bps = throughput(n_b, spec.fading.sample_rate_hz, n, pr.ber);
    pr.energy_per_useful_bit =
        pr.ber < 1.0 ? energy_per_useful_bit(1.0, n_b, pr.ber) : std::numeric_limits<double>::infinity();
    result.points.push_back(pr);
  }
  return result;
}

std::optional<double> crossing_point(std::span<const double> x_db, std::span<const double> values, double target) {
  if (x_db.size() != values.size()) throw std::invalid_argument("crossing_point: size mismatch");
  if (!(target > 0.0)) throw std::invalid_argument("crossing_point: target must be positive");
  for (std::size_t i = 0; i + 1 < values.size(); ++i) {
    const double a = values[i];
    const double b = values[i + 1];
    if (!(a >= target && b < target)) continue;
    if (b > 0.0) {
      const double t = (std::log10(a) - std::log10(target)) / (std::log10(a) - std::log10(b));
      return x_db[i] + t * (x_db[i + 1] - x_db[i]);
    }
    const double t = (a - target) / (a - b);
    return x_db[i] + t * (x_db[i + 1] - x_db[i]);
  }
  return std::nullopt;
}

}  // namespace cssm
