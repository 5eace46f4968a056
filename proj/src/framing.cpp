#include "cssm/framing.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace cssm {

std::string_view to_string(Scheme s) {
  switch (s) {
    case Scheme::Lora: return "lora";
    case Scheme::Iqcss: return "iqcss";
    case Scheme::Dcrk: return "dcrk";
  }
  return "unknown";
}

void FrameConfig::validate(std::size_t n) const {
  if (preamble_up < 0 || sfd_down < 0 || payload_chirps < 0) {
    throw std::invalid_argument("frame chirp counts must be non-negative");
  }
  if (n_cp >= n) throw std::invalid_argument("cyclic prefix must be shorter than the chirp");
  if (scheme == Scheme::Dcrk) num_rates(ne);
}

int bits_per_chirp(Scheme scheme, int sf, int ne) {
  switch (scheme) {
    case Scheme::Lora: return sf;
    case Scheme::Iqcss: return 2 * sf;
    case Scheme::Dcrk: return sf + ne;
  }
  throw std::invalid_argument("unknown scheme");
}

FramePayload payload_from_bits(const FrameConfig& cfg, int sf, std::span<const std::uint8_t> bits) {
  const auto per_chirp = static_cast<std::size_t>(bits_per_chirp(cfg.scheme, sf, cfg.ne));
  if (cfg.payload_chirps < 0 || bits.size() != per_chirp * static_cast<std::size_t>(cfg.payload_chirps)) {
    throw std::invalid_argument("payload bit count does not match frame configuration");
  }
  const auto width = static_cast<std::size_t>(sf);
  FramePayload payload;
  payload.bits.assign(bits.begin(), bits.end());
  payload.symbols.reserve(static_cast<std::size_t>(cfg.payload_chirps));
  for (std::size_t offset = 0; offset < bits.size(); offset += per_chirp) {
    const auto word = bits.subspan(offset, per_chirp);
    switch (cfg.scheme) {
      case Scheme::Lora:
        payload.symbols.emplace_back(bits_to_symbol(word, sf));
        break;
      case Scheme::Iqcss:
        payload.symbols.emplace_back(
            IqcssSymbol{bits_to_symbol(word.first(width), sf).k, bits_to_symbol(word.subspan(width), sf).k});
        break;
      case Scheme::Dcrk: {
        const auto k = bits_to_symbol(word.first(width), sf).k;
        const int rate = rate_map(word.subspan(width));
        payload.symbols.emplace_back(DcrkSymbol{k, index_from_rate(rate, cfg.ne), rate});
        break;
      }
    }
  }
  return payload;
}

BitWord symbol_bits(const PayloadSymbol& s, int sf, int ne) {
  if (const auto* css = std::get_if<CssSymbol>(&s)) return symbol_to_bits(*css, sf);
  if (const auto* iq = std::get_if<IqcssSymbol>(&s)) {
    auto bits = symbol_to_bits({iq->ki}, sf);
    const auto q = symbol_to_bits({iq->kq}, sf);
    bits.insert(bits.end(), q.begin(), q.end());
    return bits;
  }
  const auto& d = std::get<DcrkSymbol>(s);
  auto bits = symbol_to_bits({d.k}, sf);
  const auto e = rate_bits(d.rate_index, ne);
  bits.insert(bits.end(), e.begin(), e.end());
  return bits;
}

Waveform modulate_symbol(const PayloadSymbol& s, const ChirpParams& p) {
  if (const auto* css = std::get_if<CssSymbol>(&s)) return css_modulate(*css, p);
  if (const auto* iq = std::get_if<IqcssSymbol>(&s)) return iqcss_modulate(*iq, p);
  return dcrk_modulate(std::get<DcrkSymbol>(s), p);
}

std::size_t frame_length(const FrameConfig& cfg, std::size_t n) { return cfg.chirp_count() * (n + cfg.n_cp); }

Waveform build_frame(const FrameConfig& cfg, const FramePayload& payload, const ChirpParams& p) {
  const std::size_t n = p.n();
  cfg.validate(n);
  if (payload.symbols.size() != static_cast<std::size_t>(cfg.payload_chirps)) {
    throw std::invalid_argument("payload symbol count does not match frame configuration");
  }
  const auto per_chirp = static_cast<std::size_t>(bits_per_chirp(cfg.scheme, p.sf(), cfg.ne));
  if (payload.bits.size() != per_chirp * payload.symbols.size()) {
    throw std::invalid_argument("payload bit count does not match frame configuration");
  }
  for (std::size_t i = 0; i < payload.symbols.size(); ++i) {
    const auto& s = payload.symbols[i];
    const bool matches = (cfg.scheme == Scheme::Lora && std::holds_alternative<CssSymbol>(s)) ||
                         (cfg.scheme == Scheme::Iqcss && std::holds_alternative<IqcssSymbol>(s)) ||
                         (cfg.scheme == Scheme::Dcrk && std::holds_alternative<DcrkSymbol>(s));
    if (!matches) throw std::invalid_argument("payload symbol type does not match scheme");
    const auto bits = symbol_bits(s, p.sf(), cfg.ne);
    if (!std::equal(bits.begin(), bits.end(), payload.bits.begin() + static_cast<std::ptrdiff_t>(i * per_chirp))) {
      throw std::invalid_argument("payload bits disagree with payload symbols");
    }
  }

  Waveform frame;
  frame.reserve(frame_length(cfg, n));
  auto append = [&](std::span<const cplx> chirp) {
    frame.insert(frame.end(), chirp.end() - static_cast<std::ptrdiff_t>(cfg.n_cp), chirp.end());
    frame.insert(frame.end(), chirp.begin(), chirp.end());
  };

  const ChirpParams unit_rate = p.with_rate(1);
  const auto up = css_modulate({0}, unit_rate);
  const auto down = dcrk_modulate({0, 0, -1}, unit_rate);
  for (int i = 0; i < cfg.preamble_up; ++i) append(up);
  for (int i = 0; i < cfg.sfd_down; ++i) append(down);
  for (const auto& s : payload.symbols) append(modulate_symbol(s, unit_rate));
  return frame;
}

ParsedFrame parse_frame(std::span<const cplx> y, const FrameConfig& cfg, const ChirpParams& p) {
  const std::size_t n = p.n();
  cfg.validate(n);
  if (y.size() != frame_length(cfg, n)) throw std::invalid_argument("received frame length mismatch");

  const std::size_t stride = n + cfg.n_cp;
  auto chirp_at = [&](std::size_t index) { return Waveform(y.begin() + static_cast<std::ptrdiff_t>(index * stride + cfg.n_cp), y.begin() + static_cast<std::ptrdiff_t>((index + 1) * stride)); };

  ParsedFrame parsed;
  parsed.preamble.reference = css_modulate({0}, p.with_rate(1));
  for (int i = 0; i < cfg.preamble_up; ++i) parsed.preamble.chirps.push_back(chirp_at(static_cast<std::size_t>(i)));
  const auto first_payload = static_cast<std::size_t>(cfg.preamble_up + cfg.sfd_down);
  for (int i = 0; i < cfg.payload_chirps; ++i) parsed.payload.push_back(chirp_at(first_payload + static_cast<std::size_t>(i)));
  return parsed;
}

}  // namespace cssm
