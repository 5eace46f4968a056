#pragma once

// Least-squares channel estimation from the preamble up-chirps.

#include <span>
#include <vector>

#include "cssm/signal.hpp"

namespace cssm {

/// Received preamble chirps (CP already removed) and the transmitted
/// reference chirp they were generated from.
struct PreambleObservation {
  std::vector<Waveform> chirps;
  Waveform reference;
};

/// h = x^H y / x^H x over the concatenated preamble.
cplx ls_flat(const PreambleObservation& obs);

/// Circular-channel LS estimate from the chirp-averaged preamble:
/// (C^H C)^{-1} C^H y_avg with C the circulant built from the reference.
/// For a unit-modulus chirp C^H C = (x^H x) I, so this is the correlation
/// C^H y_avg divided by the reference energy, evaluated with FFTs. Only the
/// first l_taps entries are returned; l_taps must lie in [1, n_cp + 1].
std::vector<cplx> ls_selective(const PreambleObservation& obs, std::size_t l_taps, std::size_t n_cp);

/// Full length-N correlation C^H y_avg / (x^H x), before truncation.
std::vector<cplx> circular_correlation_estimate(const PreambleObservation& obs);

}  // namespace cssm
