#include "cssm/channel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>

namespace cssm {

namespace {

constexpr double kSpeedOfLight = 299'792'458.0;

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

}  // namespace

void FadingSpec::validate() const {
  if (profile.empty()) throw std::invalid_argument("fading profile has no taps");
  if (!std::isfinite(doppler_hz) || doppler_hz < 0.0) throw std::invalid_argument("Doppler must be >= 0");
  if (!(sample_rate_hz > 0.0)) throw std::invalid_argument("sample rate must be positive");
  int prev = -1;
  for (const auto& tap : profile) {
    if (tap.delay_samples < 0 || tap.delay_samples <= prev) {
      throw std::invalid_argument("tap delays must be non-negative and strictly increasing");
    }
    if (!std::isfinite(tap.avg_power_db)) throw std::invalid_argument("tap power must be finite");
    prev = tap.delay_samples;
  }
}

std::vector<double> FadingSpec::linear_powers() const {
  std::vector<double> p;
  p.reserve(profile.size());
  for (const auto& tap : profile) p.push_back(db_to_linear(tap.avg_power_db));
  return p;
}

void FadingSpec::normalize() {
  validate();
  double total = 0.0;
  for (double p : linear_powers()) total += p;
  const double offset = 10.0 * std::log10(total);
  for (auto& tap : profile) tap.avg_power_db -= offset;
}

std::size_t FadingSpec::impulse_length() const {
  validate();
  return static_cast<std::size_t>(profile.back().delay_samples) + 1;
}

ChannelRealization::ChannelRealization(std::vector<int> delays, std::vector<std::vector<cplx>> traces,
                                       std::size_t length, std::uint64_t seed)
    : delays_(std::move(delays)), traces_(std::move(traces)), length_(length), seed_(seed) {
  if (delays_.empty() || delays_.size() != traces_.size()) {
    throw std::invalid_argument("channel realization needs one trace per tap");
  }
  for (const auto& t : traces_) {
    if (t.size() != 1 && t.size() != length_) throw std::invalid_argument("tap trace length mismatch");
  }
}

ChannelRealization ChannelRealization::fixed(std::span<const cplx> taps, std::size_t length) {
  if (taps.empty()) throw std::invalid_argument("impulse response is empty");
  std::vector<int> delays;
  std::vector<std::vector<cplx>> traces;
  for (std::size_t l = 0; l < taps.size(); ++l) {
    delays.push_back(static_cast<int>(l));
    traces.push_back({taps[l]});
  }
  return {std::move(delays), std::move(traces), length, 0};
}

bool ChannelRealization::time_invariant() const noexcept {
  return std::all_of(traces_.begin(), traces_.end(), [](const auto& t) { return t.size() == 1; });
}

std::vector<cplx> ChannelRealization::impulse_response(std::size_t n) const {
  std::vector<cplx> h(static_cast<std::size_t>(delays_.back()) + 1, cplx{0.0, 0.0});
  for (std::size_t i = 0; i < delays_.size(); ++i) h[static_cast<std::size_t>(delays_[i])] += gain(i, n);
  return h;
}

void add_awgn(std::span<cplx> x, NoiseSpec noise, Rng& rng) {
  if (noise.sigma2 < 0.0 || !std::isfinite(noise.sigma2)) throw std::invalid_argument("noise variance must be >= 0");
  if (noise.sigma2 == 0.0) return;
  std::normal_distribution<double> gauss(0.0, std::sqrt(noise.sigma2 / 2.0));
  for (auto& v : x) {
    const double re = gauss(rng);
    const double im = gauss(rng);
    v += cplx{re, im};
  }
}

Waveform awgn(std::span<const cplx> x, NoiseSpec noise, Rng& rng) {
  Waveform out(x.begin(), x.end());
  add_awgn(out, noise, rng);
  return out;
}

double doppler_from_mobility(double speed_kmh, double carrier_hz) {
  if (speed_kmh < 0.0) throw std::invalid_argument("speed must be non-negative");
  return (speed_kmh / 3.6) * carrier_hz / kSpeedOfLight;
}

ChannelRealization realize_channel(const FadingSpec& spec, std::size_t num_samples, std::uint64_t seed,
                                   FadingMode mode) {
  spec.validate();
  if (num_samples == 0) throw std::invalid_argument("realization must cover at least one sample");

  Rng rng(seed);
  const auto powers = spec.linear_powers();
  std::vector<int> delays;
  std::vector<std::vector<cplx>> traces;
  const bool is_static = mode == FadingMode::Block || spec.doppler_hz == 0.0;

  for (std::size_t tap = 0; tap < spec.profile.size(); ++tap) {
    delays.push_back(spec.profile[tap].delay_samples);
    if (is_static) {
      std::normal_distribution<double> gauss(0.0, std::sqrt(powers[tap] / 2.0));
      const double re = gauss(rng);
      const double im = gauss(rng);
      traces.push_back({cplx{re, im}});
      continue;
    }

    std::uniform_real_distribution<double> uniform(0.0, 2.0 * std::numbers::pi);
    std::vector<cplx> trace(num_samples, cplx{0.0, 0.0});
    constexpr std::size_t kResync = 1024;  // bounds rounding drift of the phasor recursion
    for (int s = 0; s < kScatterers; ++s) {
      const double angle = uniform(rng);
      const double phase0 = uniform(rng);
      const double omega = 2.0 * std::numbers::pi * spec.doppler_hz * std::cos(angle) / spec.sample_rate_hz;
      const cplx step = std::polar(1.0, omega);
      for (std::size_t start = 0; start < num_samples; start += kResync) {
        cplx cur = std::polar(1.0, omega * static_cast<double>(start) + phase0);
        const std::size_t stop = std::min(num_samples, start + kResync);
        for (std::size_t n = start; n < stop; ++n) {
          trace[n] += cur;
          cur *= step;
        }
      }
    }
    const double scale = std::sqrt(powers[tap] / kScatterers);
    for (auto& v : trace) v *= scale;
    traces.push_back(std::move(trace));
  }
  return {std::move(delays), std::move(traces), num_samples, seed};
}

Waveform apply_channel(std::span<const cplx> x, const ChannelRealization& h) {
  if (x.size() > h.length()) throw std::invalid_argument("channel realization shorter than the signal");
  Waveform out(x.size(), cplx{0.0, 0.0});
  for (std::size_t tap = 0; tap < h.num_taps(); ++tap) {
    const auto d = static_cast<std::size_t>(h.delays()[tap]);
    for (std::size_t n = d; n < x.size(); ++n) out[n] += h.gain(tap, n) * x[n - d];
  }
  return out;
}

Waveform add_cp(std::span<const cplx> x, std::size_t n_cp) {
  if (n_cp >= x.size()) throw std::invalid_argument("cyclic prefix must be shorter than the chirp");
  Waveform out;
  out.reserve(x.size() + n_cp);
  out.insert(out.end(), x.end() - static_cast<std::ptrdiff_t>(n_cp), x.end());
  out.insert(out.end(), x.begin(), x.end());
  return out;
}

Waveform remove_cp(std::span<const cplx> y, std::size_t n_cp) {
  if (n_cp >= y.size()) throw std::invalid_argument("cyclic prefix must be shorter than the chirp");
  return Waveform(y.begin() + static_cast<std::ptrdiff_t>(n_cp), y.end());
}

FadingSpec load_profile(std::istream& in, double sample_rate_hz, double doppler_hz) {
  if (!(sample_rate_hz > 0.0)) throw std::invalid_argument("sample rate must be positive");
  std::map<int, double> merged;  // delay in samples -> linear power
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    double delay_us = 0.0;
    double power_db = 0.0;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::string extra;
    if (!(fields >> delay_us) || !(fields >> power_db) || (fields >> extra)) {
      throw std::invalid_argument("malformed profile line " + std::to_string(line_no));
    }
    if (delay_us < 0.0 || !std::isfinite(delay_us) || !std::isfinite(power_db)) {
      throw std::invalid_argument("invalid tap on profile line " + std::to_string(line_no));
    }
    const auto delay = static_cast<int>(std::lround(delay_us * 1e-6 * sample_rate_hz));
    merged[delay] += db_to_linear(power_db);
  }
  if (merged.empty()) throw std::invalid_argument("fading profile has no taps");

  FadingSpec spec;
  spec.doppler_hz = doppler_hz;
  spec.sample_rate_hz = sample_rate_hz;
  spec.profile.clear();
  for (const auto& [delay, power] : merged) spec.profile.push_back({delay, 10.0 * std::log10(power)});
  spec.normalize();
  return spec;
}

FadingSpec load_profile_file(const std::filesystem::path& path, double sample_rate_hz, double doppler_hz) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open channel profile " + path.string());
  return load_profile(in, sample_rate_hz, doppler_hz);
}

}  // namespace cssm
