#pragma once

// Discrete-time chirp generation and the spectral transform shared by all
// detectors.

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace cssm {

using cplx = std::complex<double>;

/// Complex baseband samples at unit sampling interval (Ts = 1/B).
using Waveform = std::vector<cplx>;

inline constexpr int kMinSf = 6;
inline constexpr int kMaxSf = 12;

/// Spreading factor, chirp rate and symbol energy of one modem configuration.
///
/// Invariants: sf in [6, 12], n == 2^sf, rate != 0, es > 0. The constructor
/// throws std::invalid_argument when any of them is violated.
class ChirpParams {
 public:
  explicit ChirpParams(int sf, int rate = 1, double es = 1.0);

  int sf() const noexcept { return sf_; }
  std::size_t n() const noexcept { return n_; }
  int rate() const noexcept { return rate_; }
  double es() const noexcept { return es_; }

  /// Per-sample amplitude sqrt(Es/N) of a single-tone chirp.
  double amplitude() const noexcept;

  ChirpParams with_rate(int rate) const { return ChirpParams(sf_, rate, es_); }

 private:
  int sf_;
  std::size_t n_;
  int rate_;
  double es_;
};

bool is_power_of_two(std::size_t n) noexcept;

/// c[k] = exp(j*pi*rate*k^2/n). The phase is reduced modulo 2n in integer
/// arithmetic before the single trig evaluation, so samples are exact
/// regardless of n.
Waveform raw_chirp(std::size_t n, int rate);

/// Shared immutable copy of raw_chirp(n, rate). Thread-safe.
const Waveform& cached_chirp(std::size_t n, int rate);

/// out[i] = c[(i + k) mod N] for 0 <= k <= N (k == N is a full period).
Waveform circular_shift(std::span<const cplx> c, std::size_t k);

/// out[i] = y[i] * conj(raw_chirp(N, rate)[i]).
Waveform dechirp(std::span<const cplx> y, int rate);

/// Unnormalized forward DFT: R(k) = sum_n r[n] exp(-j 2 pi k n / N).
/// Any length is accepted; power-of-two lengths are the fast path.
std::vector<cplx> spectrum(std::span<const cplx> r);

/// Inverse of spectrum(), including the 1/N factor.
std::vector<cplx> inverse_spectrum(std::span<const cplx> spec);

/// |sum_k exp(j pi m1 k^2 / n) exp(-j pi m2 k^2 / n)|.
double cross_rate_inner_product(std::size_t n, int m1, int m2);

/// sum_n |x[n]|^2
double energy(std::span<const cplx> x) noexcept;

}  // namespace cssm
