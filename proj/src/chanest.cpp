#include "cssm/chanest.hpp"

#include <stdexcept>

namespace cssm {

namespace {

void validate(const PreambleObservation& obs) {
  if (obs.chirps.empty()) throw std::invalid_argument("preamble observation has no chirps");
  for (const auto& c : obs.chirps) {
    if (c.size() != obs.reference.size()) throw std::invalid_argument("preamble chirp length mismatch");
  }
  if (!(energy(obs.reference) > 0.0)) throw std::invalid_argument("reference chirp has zero energy");
}

}  // namespace

cplx ls_flat(const PreambleObservation& obs) {
  validate(obs);
  // Compensated summation keeps the noiseless estimate exact to a few ulps
  // over long preambles.
  cplx num{0.0, 0.0};
  cplx carry{0.0, 0.0};
  for (const auto& y : obs.chirps) {
    for (std::size_t i = 0; i < y.size(); ++i) {
      const cplx term = std::conj(obs.reference[i]) * y[i] - carry;
      const cplx next = num + term;
      carry = (next - num) - term;
      num = next;
    }
  }
  const double den = energy(obs.reference) * static_cast<double>(obs.chirps.size());
  return num / den;
}

std::vector<cplx> circular_correlation_estimate(const PreambleObservation& obs) {
  validate(obs);
  const std::size_t n = obs.reference.size();
  Waveform avg(n, cplx{0.0, 0.0});
  for (const auto& y : obs.chirps) {
    for (std::size_t i = 0; i < n; ++i) avg[i] += y[i];
  }
  const double inv_p = 1.0 / static_cast<double>(obs.chirps.size());
  for (auto& v : avg) v *= inv_p;

  // (C^H y)[l] = sum_n conj(x[n - l]) y[n]  <=>  Y(k) conj(X(k)) in frequency.
  const auto y_f = spectrum(avg);
  auto x_f = spectrum(obs.reference);
  for (std::size_t k = 0; k < n; ++k) x_f[k] = y_f[k] * std::conj(x_f[k]);
  auto h = inverse_spectrum(x_f);
  const double inv_e = 1.0 / energy(obs.reference);
  for (auto& v : h) v *= inv_e;
  return h;
}

std::vector<cplx> ls_selective(const PreambleObservation& obs, std::size_t l_taps, std::size_t n_cp) {
  if (l_taps == 0 || l_taps > n_cp + 1 || l_taps > obs.reference.size()) {
    throw std::invalid_argument("tap count must be in [1, n_cp + 1]");
  }
  auto h = circular_correlation_estimate(obs);
  h.resize(l_taps);
  return h;
}

}  // namespace cssm
