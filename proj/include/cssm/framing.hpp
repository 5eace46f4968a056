#pragma once

// Packet layout: preamble up-chirps, SFD down-chirps and payload chirps, with
// an optional cyclic prefix on every chirp.

#include <cstdint>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "cssm/chanest.hpp"
#include "cssm/modems.hpp"

namespace cssm {

enum class Scheme { Lora, Iqcss, Dcrk };

std::string_view to_string(Scheme s);

struct FrameConfig {
  int preamble_up = 10;
  int sfd_down = 2;
  int payload_chirps = 30;
  std::size_t n_cp = 0;
  Scheme scheme = Scheme::Lora;
  int ne = 0;  ///< chirp-rate bits, DCRK only

  /// Throws std::invalid_argument for negative counts, n_cp >= n or a bad ne.
  void validate(std::size_t n) const;
  std::size_t chirp_count() const noexcept {
    return static_cast<std::size_t>(preamble_up + sfd_down + payload_chirps);
  }
};

/// Payload bits per chirp: SF (LoRa), 2 SF (IQCSS) or SF + Ne (DCRK).
int bits_per_chirp(Scheme scheme, int sf, int ne);

using PayloadSymbol = std::variant<CssSymbol, IqcssSymbol, DcrkSymbol>;

struct FramePayload {
  std::vector<PayloadSymbol> symbols;
  BitWord bits;
};

/// Splits a flat bit stream into scheme symbols. IQCSS takes the in-phase
/// word first; DCRK takes the frequency word (LSB-first) and then the
/// chirp-rate word (MSB-first).
FramePayload payload_from_bits(const FrameConfig& cfg, int sf, std::span<const std::uint8_t> bits);

/// Bits carried by a single decoded symbol, in payload_from_bits order.
BitWord symbol_bits(const PayloadSymbol& s, int sf, int ne);

Waveform modulate_symbol(const PayloadSymbol& s, const ChirpParams& p);

/// (preamble_up + sfd_down + payload_chirps) * (N + n_cp)
std::size_t frame_length(const FrameConfig& cfg, std::size_t n);

Waveform build_frame(const FrameConfig& cfg, const FramePayload& payload, const ChirpParams& p);

struct ParsedFrame {
  PreambleObservation preamble;
  std::vector<Waveform> payload;
};

/// Genie-aided segmentation of a received frame with known boundaries.
/// SFD chirps are skipped.
ParsedFrame parse_frame(std::span<const cplx> y, const FrameConfig& cfg, const ChirpParams& p);

}  // namespace cssm
