#pragma once

// Modulators and maximum-likelihood demodulators for classical LoRa CSS,
// IQCSS and DCRK-CSS.

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "cssm/signal.hpp"

namespace cssm {

/// Bits as 0/1 values. Frequency words are LSB-first (bits[0] has weight 1);
/// chirp-rate words are read MSB-first, matching the rate table notation.
using BitWord = std::vector<std::uint8_t>;

struct CssSymbol {
  std::uint32_t k = 0;
  friend bool operator==(const CssSymbol&, const CssSymbol&) = default;
};

struct IqcssSymbol {
  std::uint32_t ki = 0;
  std::uint32_t kq = 0;
  friend bool operator==(const IqcssSymbol&, const IqcssSymbol&) = default;
};

/// Frequency index plus chirp rate. rate_index is the value of the
/// chirp-rate bit word (0-based position in the ascending rate list).
struct DcrkSymbol {
  std::uint32_t k = 0;
  int rate_index = 0;
  int rate = 1;
  friend bool operator==(const DcrkSymbol&, const DcrkSymbol&) = default;
};

struct NonCoherent {};

struct CoherentFlat {
  cplx h{1.0, 0.0};
};

/// Circular channel impulse response, taps[0] at zero delay.
struct CoherentSelective {
  std::vector<cplx> taps;
};

using DetectorMode = std::variant<NonCoherent, CoherentFlat, CoherentSelective>;

/// Hard decision plus the winning metric and its margin over the runner-up.
/// For IQCSS both are the smaller of the in-phase and quadrature values.
template <typename Symbol>
struct Decision {
  Symbol symbol;
  double metric = 0.0;
  double margin = 0.0;
};

// Bit mapping

/// k = sum_i 2^i bits[i]; bits.size() must equal sf.
CssSymbol bits_to_symbol(std::span<const std::uint8_t> bits, int sf);
BitWord symbol_to_bits(CssSymbol s, int width);

/// Number of chirp rates P = 2^ne for ne in [1, 3].
int num_rates(int ne);
/// Chirp rate of a given rate index: ascending non-zero integers centred on 0.
int rate_from_index(int rate_index, int ne);
/// Inverse of rate_from_index; throws if rate is not in the alphabet.
int index_from_rate(int rate, int ne);
/// Chirp rate for an MSB-first rate bit word of width ne.
int rate_map(std::span<const std::uint8_t> rate_bits);
BitWord rate_bits(int rate_index, int ne);

DcrkSymbol make_dcrk_symbol(std::uint32_t k, int rate_index, int ne);

// Classical CSS (LoRa)

/// x_k[n] = sqrt(Es/N) exp(j 2 pi k n / N) c[n]; p.rate() must be 1.
Waveform css_modulate(CssSymbol s, const ChirpParams& p);

/// argmax over k of |R(k)| (NonCoherent) or Re{R~(k)} (coherent modes).
/// Ties resolve to the lowest index.
Decision<CssSymbol> css_demod(std::span<const cplx> y, const ChirpParams& p, const DetectorMode& mode);

// IQCSS

Waveform iqcss_modulate(IqcssSymbol s, const ChirpParams& p);

/// Coherent only: mode must be CoherentFlat or CoherentSelective.
Decision<IqcssSymbol> iqcss_demod(std::span<const cplx> y, const ChirpParams& p, const DetectorMode& mode);

// DCRK-CSS

Waveform dcrk_modulate(const DcrkSymbol& s, const ChirpParams& p);

/// R_p(k) for every rate of the alphabet, rows in rate-index order.
std::vector<std::vector<cplx>> dcrk_bank_spectra(std::span<const cplx> y, int ne);

/// Joint argmax over (rate index, k). NonCoherent uses |R_p(k)|, CoherentFlat
/// uses Re{h* R_p(k)}. CoherentSelective is rejected.
Decision<DcrkSymbol> dcrk_demod(std::span<const cplx> y, const ChirpParams& p, int ne, const DetectorMode& mode);

/// Matched-filter front end H^H y for a circulant channel: out[n] =
/// sum_l conj(taps[l]) y[(n + l) mod N].
Waveform selective_matched_filter(std::span<const cplx> y, std::span<const cplx> taps);

}  // namespace cssm
