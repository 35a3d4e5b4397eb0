#include "ofdm/tx_chain.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace ofdm {

BitVec ConvCode::encode(const BitVec& info_bits) const {
  if (info_bits.empty()) throw std::invalid_argument("empty input to conv_encode");
  const int m = memory();
  BitVec in(info_bits);
  in.insert(in.end(), m, 0);  // zero tail
  BitVec out;
  out.reserve(2 * in.size());
  unsigned state = 0;  // previous m bits, most recent at bit m-1
  for (uint8_t b : in) {
    unsigned reg = (static_cast<unsigned>(b) << m) | state;
    out.push_back(static_cast<uint8_t>(std::popcount(reg & static_cast<unsigned>(poly_a)) & 1));
    out.push_back(static_cast<uint8_t>(std::popcount(reg & static_cast<unsigned>(poly_b)) & 1));
    state = reg >> 1;
  }
  return out;
}

std::vector<size_t> interleaver_permutation(size_t n, uint64_t seed) {
  std::vector<size_t> perm(n);
  std::iota(perm.begin(), perm.end(), size_t{0});
  Rng rng(mix_seed(seed, 0x696e746cULL));
  std::shuffle(perm.begin(), perm.end(), rng);
  return perm;
}

BitVec interleave(const BitVec& bits, uint64_t seed) {
  auto perm = interleaver_permutation(bits.size(), seed);
  BitVec out(bits.size());
  for (size_t i = 0; i < bits.size(); ++i) out[i] = bits[perm[i]];
  return out;
}

BitVec deinterleave(const BitVec& bits, uint64_t seed) {
  auto perm = interleaver_permutation(bits.size(), seed);
  BitVec out(bits.size());
  for (size_t i = 0; i < bits.size(); ++i) out[perm[i]] = bits[i];
  return out;
}

namespace {

int gray_decode4(int g) {
  int b = g;
  b ^= b >> 1;
  b ^= b >> 2;
  return b & 0xf;
}

}  // namespace

Qam256::Qam256() {
  const double scale = 1.0 / std::sqrt(170.0);
  for (int label = 0; label < 256; ++label) {
    const int gi = (label >> 4) & 0xf;
    const int gq = label & 0xf;
    const double vi = 2.0 * gray_decode4(gi) - 15.0;
    const double vq = 2.0 * gray_decode4(gq) - 15.0;
    symbols_[label] = cplx(vi * scale, vq * scale);
  }
}

cplx Qam256::map(const uint8_t* bits) const {
  int label = 0;
  for (int q = 0; q < 8; ++q) label = (label << 1) | (bits[q] & 1);
  return symbols_[label];
}

int Qam256::hard_demap(cplx x) const {
  int best = 0;
  double best_d = std::norm(x - symbols_[0]);
  for (int k = 1; k < 256; ++k) {
    double d = std::norm(x - symbols_[k]);
    if (d < best_d) { best_d = d; best = k; }
  }
  return best;
}

const Qam256& qam256() {
  static const Qam256 q;
  return q;
}

cplx qpsk_symbol(int label) {
  const double s = 1.0 / std::sqrt(2.0);
  const double re = (label & 2) ? -s : s;
  const double im = (label & 1) ? -s : s;
  return cplx(re, im);
}

int info_bits_per_frame(const SystemConfig& sys, const ConvCode& code) {
  const int coded = sys.n_data() * sys.bits_per_symbol;
  if (coded % 2 != 0) throw std::invalid_argument("coded bit count must be even");
  return coded / 2 - code.memory();
}

SymbolFrame build_frame(const SystemConfig& sys, const ConvCode& code,
                        const BitVec& info_bits, uint64_t pilot_seed) {
  const int K = info_bits_per_frame(sys, code);
  if (static_cast<int>(info_bits.size()) != K)
    throw std::invalid_argument("bit-length mismatch in build_frame");

  SymbolFrame frame;
  frame.info_bits = info_bits;
  frame.coded_bits = interleave(code.encode(info_bits), sys.interleaver_seed);

  const int n = sys.n_subcarriers;
  frame.symbol_vector = cvec::Zero(n);
  const int q_bits = sys.bits_per_symbol;
  const Qam256& qam = qam256();
  for (size_t d = 0; d < sys.data_indices.size(); ++d) {
    const uint8_t* group = frame.coded_bits.data() + d * q_bits;
    frame.symbol_vector[sys.data_indices[d] - 1] = qam.map(group);
  }

  Rng prng(mix_seed(pilot_seed, 0x70696c6fULL));
  std::uniform_int_distribution<int> qdist(0, 3);
  frame.pilot_values = cvec(sys.n_pilots());
  for (int p = 0; p < sys.n_pilots(); ++p) {
    frame.pilot_values[p] = qpsk_symbol(qdist(prng));
    frame.symbol_vector[sys.pilot_indices[p] - 1] = frame.pilot_values[p];
  }
  return frame;
}

BitVec random_bits(size_t n, Rng& rng) {
  BitVec out(n);
  std::uniform_int_distribution<int> d(0, 1);
  for (auto& b : out) b = static_cast<uint8_t>(d(rng));
  return out;
}

}  // namespace ofdm
