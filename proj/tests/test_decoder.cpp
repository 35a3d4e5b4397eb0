#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "ofdm/decoder.hpp"
#include "ofdm/estimator.hpp"
#include "ofdm/tx_chain.hpp"

using namespace ofdm;

namespace {

// Exhaustive bitwise MAP over all zero-tail-terminated codewords.
struct ExhaustiveMarginals {
  std::vector<double> info_llr;   // over info positions (tail excluded)
  std::vector<double> coded_llr;  // posterior, 2 per trellis step
};

ExhaustiveMarginals exhaustive_map(const ConvCode& code, int k_info,
                                   const std::vector<double>& channel_llrs) {
  const int steps = static_cast<int>(channel_llrs.size() / 2);
  auto lp = [&](int pos, int bit) {
    const double l = channel_llrs[pos];
    const double lp1 = -std::log1p(std::exp(l));
    return bit ? lp1 : l + lp1;
  };
  std::vector<double> info0(k_info, 0.0), info1(k_info, 0.0);
  std::vector<double> cod0(2 * steps, 0.0), cod1(2 * steps, 0.0);
  std::vector<BitVec> words;
  std::vector<BitVec> infos;
  double max_lp = -1e300;
  std::vector<double> joint;
  for (int u = 0; u < (1 << k_info); ++u) {
    BitVec bits(k_info);
    for (int k = 0; k < k_info; ++k) bits[k] = (u >> k) & 1;
    const BitVec coded = code.encode(bits);
    double j = 0.0;
    for (size_t c = 0; c < coded.size(); ++c) j += lp(int(c), coded[c]);
    joint.push_back(j);
    words.push_back(coded);
    infos.push_back(bits);
    max_lp = std::max(max_lp, j);
  }
  for (size_t i = 0; i < joint.size(); ++i) {
    const double p = std::exp(joint[i] - max_lp);
    for (int k = 0; k < k_info; ++k)
      (infos[i][k] ? info1[k] : info0[k]) += p;
    for (int c = 0; c < 2 * steps; ++c)
      (words[i][c] ? cod1[c] : cod0[c]) += p;
  }
  ExhaustiveMarginals out;
  for (int k = 0; k < k_info; ++k)
    out.info_llr.push_back(std::log(info0[k]) - std::log(info1[k]));
  for (int c = 0; c < 2 * steps; ++c)
    out.coded_llr.push_back(std::log(cod0[c]) - std::log(cod1[c]));
  return out;
}

SymbolPmf random_pmf(uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  SymbolPmf p(Qam256::size());
  double s = 0.0;
  for (double& v : p) {
    v = u(rng);
    s += v;
  }
  for (double& v : p) v /= s;
  return p;
}

}  // namespace

TEST_CASE("demap edge cases") {
  cplx m;
  double v;
  const SymbolPmf zero = demap_message(cplx(0.3, 0.1), cplx(0.0, 0.0), 0.0,
                                       0.1, &m, &v);
  for (double p : zero) CHECK(p == doctest::Approx(1.0 / 256));
  CHECK(m == cplx(0.0, 0.0));
  CHECK(std::isinf(v));

  // Noiseless limit collapses to the nearest symbol.
  const Qam256& qam = qam256();
  const cplx target = qam.symbol(137);
  const SymbolPmf hard = demap_message(target, cplx(1.0, 0.0), 1.0, 0.0);
  CHECK(hard[137] == 1.0);
  CHECK(std::accumulate(hard.begin(), hard.end(), 0.0) == 1.0);
}

TEST_CASE("demap matches the Gaussian likelihood") {
  const Qam256& qam = qam256();
  const cplx y(0.31, -0.44), h(0.8, 0.3);
  const double h2 = 0.9, beta = 0.05;
  cplx m;
  double v;
  const SymbolPmf pmf = demap_message(y, h, h2, beta, &m, &v);
  CHECK(std::abs(m - y * std::conj(h) / h2) < 1e-15);
  CHECK(v == doctest::Approx(beta / h2));
  double norm = 0.0;
  for (int k = 0; k < 256; ++k) norm += std::exp(-std::norm(qam.symbol(k) - m) / v);
  for (int k = 0; k < 256; ++k) {
    const double ref = std::exp(-std::norm(qam.symbol(k) - m) / v) / norm;
    CHECK(pmf[k] == doctest::Approx(ref).epsilon(1e-10));
  }
  CHECK(std::accumulate(pmf.begin(), pmf.end(), 0.0) ==
        doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("bcjr matches exhaustive enumeration on a toy code") {
  ConvCode toy;
  toy.poly_a = 07;
  toy.poly_b = 05;
  toy.constraint_length = 3;
  const Bcjr bcjr(toy);
  const int k_info = 8;
  const int steps = k_info + toy.memory();
  Rng rng(5);
  std::normal_distribution<double> g(0.0, 2.0);
  for (int draw = 0; draw < 50; ++draw) {
    std::vector<double> llr(2 * steps);
    for (double& l : llr) l = g(rng);
    const Bcjr::Result got = bcjr.decode(llr);
    const ExhaustiveMarginals ref = exhaustive_map(toy, k_info, llr);
    for (int k = 0; k < k_info; ++k)
      CHECK(got.info_posterior_llr[k] ==
            doctest::Approx(ref.info_llr[k]).epsilon(1e-9));
    for (int c = 0; c < 2 * steps; ++c) {
      const double post = got.coded_extrinsic_llr[c] + llr[c];
      CHECK(post == doctest::Approx(ref.coded_llr[c]).epsilon(1e-9));
    }
  }
}

TEST_CASE("bcjr with uninformative input stays uninformative") {
  ConvCode toy;
  toy.poly_a = 07;
  toy.poly_b = 05;
  toy.constraint_length = 3;
  const Bcjr bcjr(toy);
  const Bcjr::Result res = bcjr.decode(std::vector<double>(2 * 10, 0.0));
  for (int k = 0; k < 8; ++k)
    CHECK(std::abs(res.info_posterior_llr[k]) < 1e-12);
  for (double e : res.coded_extrinsic_llr) CHECK(std::abs(e) < 1e-12);
}

TEST_CASE("mapper to symbol") {
  // Uniform priors map to a uniform message.
  double zeros[8] = {0};
  const SymbolPmf uni = mapper_to_symbol(zeros);
  for (double p : uni) CHECK(p == doctest::Approx(1.0 / 256).epsilon(1e-12));

  // Hard priors collapse to the labelled symbol.
  const Qam256& qam = qam256();
  for (int label : {0, 77, 200, 255}) {
    double priors[8];
    for (int q = 0; q < 8; ++q)
      priors[q] = qam.bit(label, q) ? -kLlrClamp : kLlrClamp;
    const SymbolPmf msg = mapper_to_symbol(priors);
    CHECK(msg[label] == doctest::Approx(1.0).epsilon(1e-20));
  }

  // Independent product oracle on random priors.
  Rng rng(3);
  std::normal_distribution<double> g(0.0, 1.5);
  double priors[8];
  for (double& p : priors) p = g(rng);
  const SymbolPmf msg = mapper_to_symbol(priors);
  double norm = 0.0;
  std::vector<double> ref(256);
  for (int k = 0; k < 256; ++k) {
    double p = 1.0;
    for (int q = 0; q < 8; ++q) {
      const double p0 = 1.0 / (1.0 + std::exp(-priors[q]));
      p *= qam.bit(k, q) ? 1.0 - p0 : p0;
    }
    ref[k] = p;
    norm += p;
  }
  for (int k = 0; k < 256; ++k)
    CHECK(msg[k] == doctest::Approx(ref[k] / norm).epsilon(1e-12));
}

TEST_CASE("mapper to bits") {
  // Uniform channel pmf gives zero extrinsic for any priors.
  SymbolPmf uni(256, 1.0 / 256);
  Rng rng(4);
  std::normal_distribution<double> g(0.0, 1.0);
  double priors[8];
  for (double& p : priors) p = g(rng);
  const auto ext_uni = mapper_to_bits(uni, priors);
  for (double e : ext_uni) CHECK(std::abs(e) < 1e-10);

  // Brute-force extrinsic oracle.
  const Qam256& qam = qam256();
  const SymbolPmf pmf = random_pmf(11);
  const auto ext = mapper_to_bits(pmf, priors);
  for (int q = 0; q < 8; ++q) {
    double s0 = 0.0, s1 = 0.0;
    for (int k = 0; k < 256; ++k) {
      double p = pmf[k];
      for (int q2 = 0; q2 < 8; ++q2) {
        if (q2 == q) continue;
        const double p0 = 1.0 / (1.0 + std::exp(-priors[q2]));
        p *= qam.bit(k, q2) ? 1.0 - p0 : p0;
      }
      (qam.bit(k, q) ? s1 : s0) += p;
    }
    CHECK(ext[q] == doctest::Approx(std::log(s0 / s1)).epsilon(1e-9));
  }
}

TEST_CASE("symbol beliefs") {
  const Qam256& qam = qam256();
  const SymbolPmf pmf = random_pmf(21);
  SymbolPmf uni(256, 1.0 / 256);
  cplx m;
  double m2;
  const SymbolPmf q = symbol_beliefs(pmf, uni, &m, &m2);
  cplx m_ref = 0.0;
  for (int k = 0; k < 256; ++k) {
    CHECK(q[k] == doctest::Approx(pmf[k]).epsilon(1e-12));
    m_ref += pmf[k] * qam.symbol(k);
  }
  CHECK(std::abs(m - m_ref) < 1e-12);
  CHECK(m2 >= std::norm(m));  // Jensen

  // Delta channel message pins the belief.
  SymbolPmf delta(256, 0.0);
  delta[42] = 1.0;
  const SymbolPmf qd = symbol_beliefs(delta, uni, &m, &m2);
  CHECK(qd[42] == doctest::Approx(1.0));
  CHECK(std::abs(m - qam.symbol(42)) < 1e-12);
  CHECK(m2 == doctest::Approx(std::norm(qam.symbol(42))).epsilon(1e-12));

  // Contradictory messages fall back to uniform and are counted.
  SymbolPmf other(256, 0.0);
  other[7] = 1.0;
  int fallbacks = 0;
  const SymbolPmf qf = symbol_beliefs(delta, other, &m, &m2, &fallbacks);
  CHECK(fallbacks == 1);
  for (double p : qf) CHECK(p == doctest::Approx(1.0 / 256));
}

TEST_CASE("decode pass with a genie channel is error free") {
  const Config cfg = default_config();
  const ConvCode code;
  const Bcjr bcjr(code);
  Rng rng(31);
  const BitVec info = random_bits(info_bits_per_frame(cfg.system, code), rng);
  const SymbolFrame frame =
      build_frame(cfg.system, code, info, cfg.system.pilot_seed);
  const int n = cfg.system.n_subcarriers;
  const double beta = 1e-4;
  Rng nrng(32);
  std::normal_distribution<double> g(0.0, std::sqrt(beta / 2.0));
  cvec y = frame.symbol_vector;
  for (int k = 0; k < n; ++k) y[k] += cplx(g(nrng), g(nrng));

  const SoftInfo out = decode_pass(y, cvec::Ones(n), rvec::Ones(n), beta,
                                   cfg.system, code, bcjr);
  REQUIRE(out.info_bits_hat.size() == info.size());
  int errors = 0;
  for (size_t k = 0; k < info.size(); ++k)
    errors += out.info_bits_hat[k] != info[k];
  CHECK(errors == 0);

  // Posterior symbol beliefs concentrate on the transmitted symbols.
  for (int d = 0; d < cfg.system.n_data(); ++d) {
    const int idx = cfg.system.data_indices[d] - 1;
    CHECK(std::abs(out.symbol_mean[d] - frame.symbol_vector[idx]) < 1e-3);
  }
}

TEST_CASE("decode pass without channel information guesses at random") {
  const Config cfg = default_config();
  const ConvCode code;
  const Bcjr bcjr(code);
  Rng rng(41);
  const BitVec info = random_bits(info_bits_per_frame(cfg.system, code), rng);
  const int n = cfg.system.n_subcarriers;
  const SoftInfo out =
      decode_pass(cvec::Ones(n), cvec::Zero(n), rvec::Zero(n), 0.1, cfg.system,
                  code, bcjr);
  int errors = 0;
  for (size_t k = 0; k < info.size(); ++k)
    errors += out.info_bits_hat[k] != info[k];
  const double ber = double(errors) / info.size();
  CHECK(ber > 0.42);
  CHECK(ber < 0.58);
}

TEST_CASE("decode pass is deterministic") {
  const Config cfg = default_config();
  const ConvCode code;
  const Bcjr bcjr(code);
  Rng rng(51);
  const BitVec info = random_bits(info_bits_per_frame(cfg.system, code), rng);
  const SymbolFrame frame =
      build_frame(cfg.system, code, info, cfg.system.pilot_seed);
  const int n = cfg.system.n_subcarriers;
  cvec y = frame.symbol_vector * cplx(0.9, 0.2);
  const SoftInfo a = decode_pass(y, cvec::Constant(n, cplx(0.9, 0.2)),
                                 rvec::Constant(n, std::norm(cplx(0.9, 0.2))),
                                 0.01, cfg.system, code, bcjr, 2);
  const SoftInfo b = decode_pass(y, cvec::Constant(n, cplx(0.9, 0.2)),
                                 rvec::Constant(n, std::norm(cplx(0.9, 0.2))),
                                 0.01, cfg.system, code, bcjr, 2);
  CHECK((a.symbol_mean - b.symbol_mean).norm() == 0.0);
  CHECK(a.info_bits_hat == b.info_bits_hat);
  CHECK(a.coded_llr == b.coded_llr);
}

TEST_CASE("soft info converts to estimator moments") {
  const Config cfg = default_config();
  const ConvCode code;
  const Bcjr bcjr(code);
  Rng rng(61);
  const BitVec info = random_bits(info_bits_per_frame(cfg.system, code), rng);
  const SymbolFrame frame =
      build_frame(cfg.system, code, info, cfg.system.pilot_seed);
  const int n = cfg.system.n_subcarriers;
  const SoftInfo out =
      decode_pass(frame.symbol_vector, cvec::Ones(n), rvec::Ones(n), 0.01,
                  cfg.system, code, bcjr);

  const SymbolMoments m =
      moments_from_soft_info(cfg.system, frame.pilot_values, out);
  CHECK(m.n_obs() == n);
  for (int p = 0; p < cfg.system.n_pilots(); ++p) {
    const int idx = cfg.system.pilot_indices[p] - 1;
    CHECK(m.mean[idx] == frame.pilot_values[p]);
    CHECK(m.second[idx] == doctest::Approx(1.0).epsilon(1e-12));
  }
  for (int d = 0; d < cfg.system.n_data(); ++d) {
    const int idx = cfg.system.data_indices[d] - 1;
    CHECK(m.mean[idx] == out.symbol_mean[d]);
    CHECK(m.second[idx] >= std::norm(m.mean[idx]) - 1e-12);
  }

  const SymbolMoments mp =
      moments_from_soft_info(cfg.system, frame.pilot_values, out, true);
  CHECK(mp.n_obs() == cfg.system.n_data());
  for (int p = 0; p < cfg.system.n_pilots(); ++p) {
    const int idx = cfg.system.pilot_indices[p] - 1;
    CHECK(mp.factor_mask[idx] == 0);
    CHECK(mp.mean[idx] == cplx(0.0, 0.0));
    CHECK(mp.second[idx] == 0.0);
  }
}
