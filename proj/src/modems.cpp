#include "cssm/modems.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace cssm {

namespace {

void check_symbol(std::uint32_t k, std::size_t n) {
  if (k >= n) throw std::out_of_range("symbol index " + std::to_string(k) + " outside alphabet");
}

void check_length(std::span<const cplx> y, std::size_t n) {
  if (y.size() != n) throw std::invalid_argument("received chirp length does not match N");
}

void check_ne(int ne) {
  if (ne < 1 || ne > 3) throw std::invalid_argument("chirp-rate bits must be in [1, 3]");
}

// Table of exp(j 2 pi q / n), q in [0, n).
const std::vector<cplx>& unit_roots(std::size_t n) {
  static std::mutex mu;
  static std::map<std::size_t, std::unique_ptr<const std::vector<cplx>>> cache;
  std::scoped_lock lock(mu);
  auto& slot = cache[n];
  if (!slot) {
    std::vector<cplx> roots(n);
    for (std::size_t q = 0; q < n; ++q) {
      const double phase = 2.0 * std::numbers::pi * static_cast<double>(q) / static_cast<double>(n);
      roots[q] = {std::cos(phase), std::sin(phase)};
    }
    slot = std::make_unique<const std::vector<cplx>>(std::move(roots));
  }
  return *slot;
}

// x[i] = a * (exp(j 2 pi k i / N) + extra(i)) * c[i], phase reduced in integers.
template <typename Extra>
Waveform mixed_chirp(std::uint32_t k, std::size_t n, int rate, double a, Extra extra) {
  const auto& roots = unit_roots(n);
  const auto& c = cached_chirp(n, rate);
  Waveform x(n);
  std::size_t q = 0;
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = a * (roots[q] + extra(i)) * c[i];
    q += k;
    if (q >= n) q -= n;
  }
  return x;
}

template <typename Metric>
Decision<std::uint32_t> argmax(std::size_t count, Metric metric) {
  Decision<std::uint32_t> d{0, -std::numeric_limits<double>::infinity(), 0.0};
  double runner_up = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < count; ++i) {
    const double v = metric(i);
    if (v > d.metric) {
      runner_up = d.metric;
      d.metric = v;
      d.symbol = static_cast<std::uint32_t>(i);
    } else if (v > runner_up) {
      runner_up = v;
    }
  }
  d.margin = count > 1 ? d.metric - runner_up : 0.0;
  return d;
}

// Equalized, dechirped spectrum R~(k) for the coherent modes.
std::vector<cplx> coherent_spectrum(std::span<const cplx> y, const ChirpParams& p, const DetectorMode& mode) {
  if (const auto* flat = std::get_if<CoherentFlat>(&mode)) {
    auto r = dechirp(y, p.rate());
    const cplx hc = std::conj(flat->h);
    for (auto& v : r) v *= hc;
    return spectrum(r);
  }
  const auto& sel = std::get<CoherentSelective>(mode);
  return spectrum(dechirp(selective_matched_filter(y, sel.taps), p.rate()));
}

}  // namespace

CssSymbol bits_to_symbol(std::span<const std::uint8_t> bits, int sf) {
  if (sf < 1 || bits.size() != static_cast<std::size_t>(sf)) {
    throw std::invalid_argument("bit word width does not match spreading factor");
  }
  std::uint32_t k = 0;
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] > 1) throw std::invalid_argument("bit values must be 0 or 1");
    k |= static_cast<std::uint32_t>(bits[i]) << i;
  }
  return {k};
}

BitWord symbol_to_bits(CssSymbol s, int width) {
  if (width < 1 || width > 31) throw std::invalid_argument("unsupported bit word width");
  check_symbol(s.k, std::size_t{1} << width);
  BitWord bits(static_cast<std::size_t>(width));
  for (int i = 0; i < width; ++i) bits[static_cast<std::size_t>(i)] = (s.k >> i) & 1u;
  return bits;
}

int num_rates(int ne) {
  check_ne(ne);
  return 1 << ne;
}

int rate_from_index(int rate_index, int ne) {
  const int count = num_rates(ne);
  if (rate_index < 0 || rate_index >= count) throw std::out_of_range("rate index outside alphabet");
  const int half = count / 2;
  return rate_index < half ? rate_index - half : rate_index - half + 1;
}

int index_from_rate(int rate, int ne) {
  const int half = num_rates(ne) / 2;
  if (rate == 0 || rate < -half || rate > half) {
    throw std::out_of_range("chirp rate " + std::to_string(rate) + " not in alphabet");
  }
  return rate < 0 ? rate + half : rate + half - 1;
}

int rate_map(std::span<const std::uint8_t> rate_bits) {
  const int ne = static_cast<int>(rate_bits.size());
  check_ne(ne);
  int index = 0;
  for (auto b : rate_bits) {
    if (b > 1) throw std::invalid_argument("bit values must be 0 or 1");
    index = (index << 1) | b;
  }
  return rate_from_index(index, ne);
}

BitWord rate_bits(int rate_index, int ne) {
  const int count = num_rates(ne);
  if (rate_index < 0 || rate_index >= count) throw std::out_of_range("rate index outside alphabet");
  BitWord bits(static_cast<std::size_t>(ne));
  for (int i = 0; i < ne; ++i) bits[static_cast<std::size_t>(i)] = (rate_index >> (ne - 1 - i)) & 1;
  return bits;
}

DcrkSymbol make_dcrk_symbol(std::uint32_t k, int rate_index, int ne) {
  return {k, rate_index, rate_from_index(rate_index, ne)};
}

Waveform css_modulate(CssSymbol s, const ChirpParams& p) {
  if (p.rate() != 1) throw std::invalid_argument("classical CSS uses chirp rate 1");
  const std::size_t n = p.n();
  check_symbol(s.k, n);
  return mixed_chirp(s.k, n, 1, p.amplitude(), [](std::size_t) { return cplx{}; });
}

Decision<CssSymbol> css_demod(std::span<const cplx> y, const ChirpParams& p, const DetectorMode& mode) {
  check_length(y, p.n());
  if (const auto* sel = std::get_if<CoherentSelective>(&mode); sel && (sel->taps.empty() || sel->taps.size() > p.n())) {
    throw std::invalid_argument("selective detection needs between 1 and N channel taps");
  }
  if (std::holds_alternative<NonCoherent>(mode)) {
    const auto r = spectrum(dechirp(y, p.rate()));
    const auto d = argmax(r.size(), [&](std::size_t k) { return std::abs(r[k]); });
    return {{d.symbol}, d.metric, d.margin};
  }
  const auto r = coherent_spectrum(y, p, mode);
  const auto d = argmax(r.size(), [&](std::size_t k) { return r[k].real(); });
  return {{d.symbol}, d.metric, d.margin};
}

Waveform iqcss_modulate(IqcssSymbol s, const ChirpParams& p) {
  if (p.rate() != 1) throw std::invalid_argument("IQCSS uses chirp rate 1");
  const std::size_t n = p.n();
  check_symbol(s.ki, n);
  check_symbol(s.kq, n);
  const auto& roots = unit_roots(n);
  const double a = std::sqrt(p.es() / (2.0 * static_cast<double>(n)));
  const cplx j{0.0, 1.0};
  return mixed_chirp(s.ki, n, 1, a, [&](std::size_t i) { return j * roots[(static_cast<std::size_t>(s.kq) * i) % n]; });
}

Decision<IqcssSymbol> iqcss_demod(std::span<const cplx> y, const ChirpParams& p, const DetectorMode& mode) {
  check_length(y, p.n());
  if (std::holds_alternative<NonCoherent>(mode)) {
    throw std::invalid_argument("IQCSS requires a channel estimate");
  }
  if (const auto* sel = std::get_if<CoherentSelective>(&mode); sel && (sel->taps.empty() || sel->taps.size() > p.n())) {
    throw std::invalid_argument("selective detection needs between 1 and N channel taps");
  }
  const auto r = coherent_spectrum(y, p, mode);
  const auto di = argmax(r.size(), [&](std::size_t k) { return r[k].real(); });
  const auto dq = argmax(r.size(), [&](std::size_t k) { return r[k].imag(); });
  return {{di.symbol, dq.symbol}, std::min(di.metric, dq.metric), std::min(di.margin, dq.margin)};
}

Waveform dcrk_modulate(const DcrkSymbol& s, const ChirpParams& p) {
  if (s.rate == 0) throw std::invalid_argument("chirp rate must be non-zero");
  const std::size_t n = p.n();
  check_symbol(s.k, n);
  return mixed_chirp(s.k, n, s.rate, p.amplitude(), [](std::size_t) { return cplx{}; });
}

std::vector<std::vector<cplx>> dcrk_bank_spectra(std::span<const cplx> y, int ne) {
  const int count = num_rates(ne);
  std::vector<std::vector<cplx>> bank;
  bank.reserve(static_cast<std::size_t>(count));
  for (int idx = 0; idx < count; ++idx) bank.push_back(spectrum(dechirp(y, rate_from_index(idx, ne))));
  return bank;
}

Decision<DcrkSymbol> dcrk_demod(std::span<const cplx> y, const ChirpParams& p, int ne, const DetectorMode& mode) {
  check_ne(ne);
  check_length(y, p.n());
  if (std::holds_alternative<CoherentSelective>(mode)) {
    throw std::invalid_argument("DCRK detection supports non-coherent and flat coherent modes only");
  }
  const auto bank = dcrk_bank_spectra(y, ne);
  const std::size_t n = p.n();
  Decision<std::uint32_t> d;
  if (const auto* flat = std::get_if<CoherentFlat>(&mode)) {
    const cplx hc = std::conj(flat->h);
    d = argmax(bank.size() * n, [&](std::size_t i) { return (hc * bank[i / n][i % n]).real(); });
  } else {
    d = argmax(bank.size() * n, [&](std::size_t i) { return std::abs(bank[i / n][i % n]); });
  }
  const int rate_index = static_cast<int>(d.symbol / n);
  return {make_dcrk_symbol(static_cast<std::uint32_t>(d.symbol % n), rate_index, ne), d.metric, d.margin};
}

Waveform selective_matched_filter(std::span<const cplx> y, std::span<const cplx> taps) {
  const std::size_t n = y.size();
  if (taps.empty() || taps.size() > n) throw std::invalid_argument("tap count must be in [1, N]");
  Waveform out(n, cplx{0.0, 0.0});
  for (std::size_t l = 0; l < taps.size(); ++l) {
    const cplx hc = std::conj(taps[l]);
    if (hc == cplx{0.0, 0.0}) continue;
    for (std::size_t i = 0; i < n; ++i) out[i] += hc * y[(i + l) % n];
  }
  return out;
}

}  // namespace cssm
