#pragma once

#include <array>
#include <vector>

#include "ofdm/config.hpp"
#include "ofdm/types.hpp"

namespace ofdm {

// Rate-1/2 non-systematic convolutional code defined by a pair of octal
// generators. Zero-tail terminated: `memory` flush zeros are appended to the
// input before encoding, so output length is 2*(K + memory).
struct ConvCode {
  int poly_a = 0561;
  int poly_b = 0753;
  int constraint_length = 9;  // taps per generator

  int memory() const { return constraint_length - 1; }
  int n_states() const { return 1 << memory(); }

  BitVec encode(const BitVec& info_bits) const;
};

// Fixed seeded permutation. interleave places in[perm[i]] at out[i].
std::vector<size_t> interleaver_permutation(size_t n, uint64_t seed);
BitVec interleave(const BitVec& bits, uint64_t seed);
BitVec deinterleave(const BitVec& bits, uint64_t seed);

// Gray-mapped square 256-QAM scaled to unit average symbol energy (1/sqrt(170)).
class Qam256 {
 public:
  Qam256();
  // Symbol for an 8-bit label, bits[0] is the MSB of the I nibble.
  cplx map(const uint8_t* bits) const;
  cplx symbol(int label) const { return symbols_[label]; }
  int bit(int label, int pos) const { return (label >> (7 - pos)) & 1; }
  static constexpr int size() { return 256; }
  // Nearest-symbol label.
  int hard_demap(cplx x) const;

 private:
  std::array<cplx, 256> symbols_;
};

const Qam256& qam256();

// Unit-energy QPSK point for a 2-bit label.
cplx qpsk_symbol(int label);

struct SymbolFrame {
  BitVec info_bits;    // u, length K
  BitVec coded_bits;   // interleaved coded stream, length D*Q
  cvec symbol_vector;  // x, length N (1-based subcarrier n at [n-1])
  cvec pilot_values;   // x_P in pilot_indices order
  // coded_bits[(i_data*Q) .. ) are the Q bits mapped to the i_data-th data
  // subcarrier (ascending data_indices order).
};

// Number of information bits carried by one frame under the given system.
int info_bits_per_frame(const SystemConfig& sys, const ConvCode& code);

SymbolFrame build_frame(const SystemConfig& sys, const ConvCode& code,
                        const BitVec& info_bits, uint64_t pilot_seed);

BitVec random_bits(size_t n, Rng& rng);

}  // namespace ofdm
