#pragma once

// AWGN, time-variant Rayleigh and tapped-delay-line channel models plus
// cyclic prefix handling.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <random>
#include <span>
#include <vector>

#include "cssm/signal.hpp"

namespace cssm {

using Rng = std::mt19937_64;

/// Circularly symmetric complex Gaussian noise, total variance sigma2 per
/// sample split equally between real and imaginary parts.
struct NoiseSpec {
  double sigma2 = 0.0;
};

struct ProfileTap {
  int delay_samples = 0;
  double avg_power_db = 0.0;
};

/// Power-delay profile plus Doppler. Delays are strictly increasing and the
/// linear powers sum to one once normalize() has run.
struct FadingSpec {
  double doppler_hz = 0.0;
  double sample_rate_hz = 250e3;
  std::vector<ProfileTap> profile{{0, 0.0}};

  /// Throws std::invalid_argument on an empty profile, negative or
  /// non-increasing delays, or non-finite values.
  void validate() const;
  /// Rescales the powers so the linear sum is exactly one.
  void normalize();
  std::vector<double> linear_powers() const;
  bool is_flat() const noexcept { return profile.size() == 1 && profile.front().delay_samples == 0; }
  /// Length of the dense impulse response (max delay + 1).
  std::size_t impulse_length() const;
};

enum class FadingMode {
  Continuous,  ///< taps evolve sample by sample with the Doppler spectrum
  Block,       ///< one static draw per realization
};

/// Per-tap complex gain traces. A trace holding a single value is static and
/// covers any number of samples.
class ChannelRealization {
 public:
  ChannelRealization(std::vector<int> delays, std::vector<std::vector<cplx>> traces, std::size_t length,
                     std::uint64_t seed);

  /// Static channel with the given dense impulse response (taps[l] at delay l).
  static ChannelRealization fixed(std::span<const cplx> taps, std::size_t length);

  std::size_t num_taps() const noexcept { return delays_.size(); }
  std::size_t length() const noexcept { return length_; }
  std::uint64_t seed() const noexcept { return seed_; }
  const std::vector<int>& delays() const noexcept { return delays_; }
  bool time_invariant() const noexcept;

  cplx gain(std::size_t tap, std::size_t n) const {
    const auto& t = traces_[tap];
    return t.size() == 1 ? t.front() : t[n];
  }

  /// Dense impulse response at time n, length max delay + 1.
  std::vector<cplx> impulse_response(std::size_t n) const;

 private:
  std::vector<int> delays_;
  std::vector<std::vector<cplx>> traces_;
  std::size_t length_;
  std::uint64_t seed_;
};

/// out[i] = x[i] + w[i].
Waveform awgn(std::span<const cplx> x, NoiseSpec noise, Rng& rng);
void add_awgn(std::span<cplx> x, NoiseSpec noise, Rng& rng);

/// Maximum Doppler shift v * f_c / c for a speed in km/h.
double doppler_from_mobility(double speed_kmh, double carrier_hz);

/// Number of sinusoids per tap used by the continuous fading generator.
inline constexpr int kScatterers = 32;

/// Draws one realization spanning num_samples. Continuous mode uses a
/// sum-of-sinusoids Jakes generator per tap (independent taps); Block mode,
/// or a zero Doppler, draws one complex Gaussian gain per tap.
ChannelRealization realize_channel(const FadingSpec& spec, std::size_t num_samples, std::uint64_t seed,
                                   FadingMode mode = FadingMode::Continuous);

/// Time-varying linear convolution out[n] = sum_l h_l[n] x[n - d_l], with
/// x[n] = 0 for n < 0. Output length equals input length.
Waveform apply_channel(std::span<const cplx> x, const ChannelRealization& h);

/// Prepends the last n_cp samples; requires n_cp < x.size().
Waveform add_cp(std::span<const cplx> x, std::size_t n_cp);
/// Drops the first n_cp samples; requires n_cp < y.size().
Waveform remove_cp(std::span<const cplx> y, std::size_t n_cp);

/// Reads a "<delay_us> <avg_power_db>" profile ('#' starts a comment).
/// Delays are rounded to the nearest sample at sample_rate_hz, colliding taps
/// are merged by adding linear power, and the total is normalized to one.
FadingSpec load_profile(std::istream& in, double sample_rate_hz, double doppler_hz);
FadingSpec load_profile_file(const std::filesystem::path& path, double sample_rate_hz, double doppler_hz);

}  // namespace cssm
