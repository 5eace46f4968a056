#pragma once

// Monte Carlo link simulation: BER/SER sweeps, throughput and effective
// energy per useful bit.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "cssm/channel.hpp"
#include "cssm/framing.hpp"

namespace cssm {

enum class ChannelKind { Awgn, Flat, Tu12 };
enum class Axis { SnrDb, EbN0Db };
enum class Coherence { Auto, On, Off };
enum class ChannelKnowledge { Estimated, Perfect };

std::string_view to_string(ChannelKind c);
std::string_view to_string(Axis a);

/// One sweep over SNR or Eb/N0 points.
///
/// SNR is the per-sample transmit power Es/N over the noise variance, with
/// unit-average-gain channels. Es excludes the cyclic prefix.
struct SweepSpec {
  Scheme scheme = Scheme::Lora;
  int sf = 6;
  int ne = 2;  ///< DCRK only
  ChannelKind channel = ChannelKind::Awgn;
  Axis axis = Axis::SnrDb;
  std::vector<double> points;

  Coherence coherent = Coherence::Auto;
  ChannelKnowledge knowledge = ChannelKnowledge::Estimated;
  bool block_fading = false;

  int preamble_up = 10;
  int sfd_down = 2;
  int payload_chirps = 30;
  std::size_t n_cp = 16;

  /// Doppler and bandwidth for Flat and Tu12; profile for Tu12 (Flat always
  /// uses a single unit tap).
  FadingSpec fading{};
  /// Estimated taps for selective detection; 0 selects min(16, n_cp + 1).
  std::size_t l_taps = 0;

  std::uint64_t min_errors = 200;  ///< symbol errors per point
  std::uint64_t max_frames = 200000;
  std::uint64_t seed = 1;
  unsigned threads = 1;

  /// Throws std::invalid_argument for contradictory or out-of-range settings.
  void validate() const;
  FrameConfig frame_config() const;
  int bits_per_chirp() const { return cssm::bits_per_chirp(scheme, sf, ne); }
  bool uses_coherent_detection() const;
  std::size_t effective_l_taps() const;
};

struct PointResult {
  double point_db = 0.0;
  double snr_db = 0.0;
  double ebn0_db = 0.0;
  std::uint64_t frames = 0;
  std::uint64_t symbols = 0;
  std::uint64_t bits = 0;
  std::uint64_t symbol_errors = 0;
  std::uint64_t bit_errors = 0;
  double ser = 0.0;
  double ber = 0.0;
  double throughput_bps = 0.0;
  /// Effective energy per useful bit in units of Es; +inf when BER == 1.
  double energy_per_useful_bit = 0.0;
};

struct SweepResult {
  SweepSpec spec;
  std::vector<PointResult> points;
};

/// Frames per stop-rule check. Fixed so results do not depend on threads.
inline constexpr std::uint64_t kFramesPerBatch = 16;

/// 10 log10(N / SF)
double spreading_gain_db(int sf);

enum class AxisDirection { SnrToEbN0, EbN0ToSnr };

/// Eb/N0 = SNR + 10 log10(N / n_b) and its inverse.
double snr_axis_convert(double value_db, AxisDirection direction, int sf, int n_b);

/// n_b * B / N * (1 - BER)
double throughput(int n_b, double b_hz, std::size_t n, double ber);

/// Es / (n_b (1 - BER)); throws std::domain_error when BER == 1.
double energy_per_useful_bit(double es, int n_b, double ber);

/// Per-frame RNG seed derived from (seed, point, frame) alone.
std::uint64_t frame_seed(std::uint64_t master, std::uint64_t point_index, std::uint64_t frame_index);

struct FrameOutcome {
  std::uint64_t symbols = 0;
  std::uint64_t bits = 0;
  std::uint64_t symbol_errors = 0;
  std::uint64_t bit_errors = 0;
};

/// One frame through transmitter, channel, estimator and detector.
FrameOutcome simulate_frame(const SweepSpec& spec, double snr_db, std::uint64_t seed);

/// Runs every point until min_errors symbol errors or max_frames frames.
/// Deterministic in (spec, seed) for any thread count.
SweepResult run_sweep(const SweepSpec& spec);

/// Abscissa where a decreasing curve crosses target, interpolating log10 of
/// the values between the first bracketing pair. nullopt if not bracketed.
std::optional<double> crossing_point(std::span<const double> x_db, std::span<const double> values, double target);

}  // namespace cssm
