#include "ofdm/harness.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "ofdm/linear_solver.hpp"

namespace ofdm {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

ConvCode make_code(const SystemConfig& sys) {
  ConvCode code;
  code.poly_a = sys.code_poly_a;
  code.poly_b = sys.code_poly_b;
  int cl = 0;
  const int m = std::max(code.poly_a, code.poly_b);
  while ((1 << cl) <= m) ++cl;
  code.constraint_length = cl;
  return code;
}

long hamming(const BitVec& a, const BitVec& b) {
  long d = 0;
  const size_t n = std::min(a.size(), b.size());
  for (size_t i = 0; i < n; ++i) d += a[i] != b[i];
  return d + static_cast<long>(std::max(a.size(), b.size()) - n);
}

rvec path_prior_variances(const ChannelConfig& ch, const MultipathChannel& chan) {
  const double mean_decay =
      (ch.decay_constant / ch.max_delay) *
      (1.0 - std::exp(-ch.max_delay / ch.decay_constant));
  const double u = ch.target_mean_gain / (chan.n_paths * mean_decay);
  rvec pv(chan.n_paths);
  for (int l = 0; l < chan.n_paths; ++l)
    pv[l] = u * std::exp(-chan.delays[l] / ch.decay_constant);
  return pv;
}

SparseChannelEstimator::Options estimator_options(const SimConfig& sim) {
  SparseChannelEstimator::Options eo;
  eo.max_inner_iters = sim.max_inner_iters;
  eo.inner_tol = sim.inner_tol;
  eo.grid_oversampling = sim.grid_oversampling;
  eo.n_components_max = sim.n_components_max;
  return eo;
}

void parallel_for(int n_items, int n_threads,
                  const std::function<void(int)>& fn) {
  if (n_threads <= 1 || n_items <= 1) {
    for (int i = 0; i < n_items; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr err;
  std::mutex err_mutex;
  auto worker = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n_items) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!err) err = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  const int k = std::min(n_threads, n_items);
  pool.reserve(k);
  for (int t = 0; t < k; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

std::string fmt_num(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

const char* receiver_name(Receiver r) {
  switch (r) {
    case Receiver::offgrid_bpmf: return "offgrid_bpmf";
    case Receiver::freq_lmmse: return "freq_lmmse";
    case Receiver::oracle: return "oracle";
  }
  return "?";
}

bool receiver_from_name(const std::string& s, Receiver& out) {
  if (s == "offgrid_bpmf" || s == "offgrid") out = Receiver::offgrid_bpmf;
  else if (s == "freq_lmmse") out = Receiver::freq_lmmse;
  else if (s == "oracle") out = Receiver::oracle;
  else return false;
  return true;
}

std::vector<MetricsRecord> run_trial(const Config& cfg, Receiver receiver,
                                     double snr_db, int trial,
                                     const TrialOptions& opts) {
  const SystemConfig& sys = cfg.system;
  const auto t0 = Clock::now();

  const ConvCode code = make_code(sys);
  const Bcjr bcjr(code);
  const uint64_t seed_base = mix_seed(cfg.sim.master_seed, trial);

  Rng bit_rng(mix_seed(seed_base, 0));
  const int k_info = info_bits_per_frame(sys, code);
  const BitVec u = random_bits(k_info, bit_rng);
  const SymbolFrame frame = build_frame(sys, code, u, sys.pilot_seed);
  const MultipathChannel chan = draw_channel(cfg.channel, sys, mix_seed(seed_base, 1));
  const Observation obs = observe(frame.symbol_vector, chan.freq_response,
                                  snr_db, mix_seed(seed_base, 2));
  const double h_energy = chan.freq_response.squaredNorm();

  MetricsRecord base;
  base.trial = trial;
  base.receiver = receiver;
  base.snr_db = snr_db;
  base.n_pilots = sys.n_pilots();
  base.poisson_mean = cfg.channel.poisson_mean;
  base.bits = k_info;

  std::vector<MetricsRecord> out;

  if (receiver == Receiver::oracle) {
    const rvec pv = path_prior_variances(cfg.channel, chan);
    const cvec h_hat = oracle_lmmse(obs.y, frame.symbol_vector, chan.delays, pv,
                                    obs.noise_var, sys);
    // Point channel estimate followed by 5 BP-subgraph iterations.
    const SoftInfo soft = decode_pass(obs.y, h_hat, h_hat.cwiseAbs2(),
                                      obs.noise_var, sys, code, bcjr, 5);
    MetricsRecord rec = base;
    rec.outer_iter = 0;
    rec.bit_errors = hamming(soft.info_bits_hat, frame.info_bits);
    rec.nmse = (h_hat - chan.freq_response).squaredNorm() / h_energy;
    rec.l_hat = chan.n_paths;
    rec.beta_hat = obs.noise_var;
    rec.runtime_ms = ms_since(t0);
    out.push_back(rec);
    return out;
  }

  if (receiver == Receiver::freq_lmmse) {
    RobustCovariance local;
    const RobustCovariance* cov = opts.cov;
    if (!cov) {
      local = robust_covariance(sys.n_subcarriers, sys.cyclic_prefix,
                                sys.subcarrier_spacing);
      cov = &local;
    }
    const auto iters = freq_lmmse_receiver(obs.y, sys, cfg.sim,
                                           frame.pilot_values, code, bcjr, *cov);
    for (size_t t = 0; t < iters.size(); ++t) {
      MetricsRecord rec = base;
      rec.outer_iter = static_cast<int>(t);
      rec.bit_errors = hamming(iters[t].info_bits_hat, frame.info_bits);
      rec.nmse = (iters[t].h_hat - chan.freq_response).squaredNorm() / h_energy;
      rec.l_hat = 0;
      rec.beta_hat = iters[t].beta_hat;
      rec.runtime_ms = ms_since(t0);
      out.push_back(rec);
    }
    return out;
  }

  SparseChannelEstimator est(sys, estimator_options(cfg.sim));
  est.reset(obs.y, pilots_only_moments(sys, frame.pilot_values));
  est.set_freeze_act_prob(true);
  BitVec prev_u;
  int unchanged = 0;
  for (int outer = 0; outer < cfg.sim.max_outer_iters; ++outer) {
    est.inner_loop();
    est.set_freeze_act_prob(false);
    cvec h_mean;
    rvec h_second;
    est.channel_posterior(h_mean, h_second);
    const SoftInfo soft = decode_pass(obs.y, h_mean, h_second,
                                      est.state().noise_var, sys, code, bcjr, 1);

    MetricsRecord rec = base;
    rec.outer_iter = outer;
    rec.bit_errors = hamming(soft.info_bits_hat, frame.info_bits);
    rec.nmse = (h_mean - chan.freq_response).squaredNorm() / h_energy;
    rec.l_hat = est.state().n_active();
    rec.beta_hat = est.state().noise_var;
    rec.runtime_ms = ms_since(t0);
    out.push_back(rec);

    if (!prev_u.empty() && prev_u == soft.info_bits_hat)
      ++unchanged;
    else
      unchanged = 0;
    prev_u = soft.info_bits_hat;
    if (unchanged >= cfg.sim.outer_patience) break;

    est.set_moments(moments_from_soft_info(sys, frame.pilot_values, soft,
                                           opts.ignore_pilots_after_first));
  }
  return out;
}

namespace {

struct SweepPoint {
  std::string key;
  Config cfg;
  double snr_db = 0.0;
  TrialOptions opts;
};

std::string fmt_key(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

std::vector<int> pilot_counts_for(int n) {
  std::vector<int> out;
  for (int p : {31, 41, 51, 61, 76, 101})
    if (p < n && 2 * (p - 1) <= n - 1) out.push_back(p);  // spacing-2 feasible
  return out;
}

void set_pilots(Config& cfg, int n_pilots) {
  const int n = cfg.system.n_subcarriers;
  if (n_pilots >= 2 && (n - 1) % (n_pilots - 1) == 0)
    cfg.system.pilot_indices = equispaced_pilots(n, n_pilots);
  else
    cfg.system.pilot_indices = random_pilots(n, n_pilots, cfg.system.pilot_seed);
  cfg.system.data_indices =
      data_indices_from_pilots(n, cfg.system.pilot_indices);
}

}  // namespace

SweepResult sweep(Experiment exp, const Config& cfg,
                  const std::vector<Receiver>& receivers, int n_threads) {
  validate(cfg);
  std::vector<SweepPoint> points;
  std::string key_col;
  const double snr0 = cfg.sim.snr_db_list.front();

  switch (exp) {
    case Experiment::snr:
      key_col = "snr_db";
      for (double snr : cfg.sim.snr_db_list) {
        SweepPoint p{fmt_key(snr), cfg, snr, {}};
        points.push_back(std::move(p));
      }
      break;
    case Experiment::pilots:
      key_col = "n_pilots";
      for (int np : pilot_counts_for(cfg.system.n_subcarriers)) {
        SweepPoint p{std::to_string(np), cfg, snr0, {}};
        set_pilots(p.cfg, np);
        points.push_back(std::move(p));
      }
      break;
    case Experiment::numtaps:
      key_col = "poisson_mean";
      for (double lam : {1.0, 3.0, 5.0, 13.0, 32.0, 80.0, 200.0, 500.0, 1200.0}) {
        SweepPoint p{fmt_key(lam), cfg, snr0, {}};
        p.cfg.channel.poisson_mean = lam;
        points.push_back(std::move(p));
      }
      break;
    case Experiment::iters:
      key_col = "outer_iter";
      points.push_back({"0", cfg, snr0, {}});
      break;
    case Experiment::pilot_ablation: {
      key_col = "variant";
      SweepPoint a{"always_pilots", cfg, snr0, {}};
      SweepPoint b{"ignore_after_first", cfg, snr0, {}};
      b.opts.ignore_pilots_after_first = true;
      points.push_back(std::move(a));
      points.push_back(std::move(b));
      break;
    }
  }

  const int n_trials = cfg.sim.n_trials;
  struct Item {
    int point;
    Receiver rec;
    int trial;
  };
  std::vector<Item> items;
  for (int p = 0; p < static_cast<int>(points.size()); ++p)
    for (Receiver r : receivers)
      for (int t = 0; t < n_trials; ++t) items.push_back({p, r, t});

  // Shared read-only covariance (same N across all sweep points).
  RobustCovariance cov;
  bool have_cov = false;
  for (Receiver r : receivers)
    if (r == Receiver::freq_lmmse) have_cov = true;
  if (have_cov)
    cov = robust_covariance(cfg.system.n_subcarriers, cfg.system.cyclic_prefix,
                            cfg.system.subcarrier_spacing);

  std::vector<std::vector<MetricsRecord>> results(items.size());
  parallel_for(static_cast<int>(items.size()), n_threads, [&](int i) {
    const Item& it = items[i];
    const SweepPoint& pt = points[it.point];
    TrialOptions topt = pt.opts;
    if (have_cov) topt.cov = &cov;
    results[i] = run_trial(pt.cfg, it.rec, pt.snr_db, it.trial, topt);
  });

  SweepResult res;
  res.header = key_col + ",receiver,ber,nmse,trials";
  for (auto& recs : results)
    res.records.insert(res.records.end(), recs.begin(), recs.end());

  struct Agg {
    long err = 0, bits = 0;
    double nmse_sum = 0.0;
    int trials = 0;
  };

  if (exp == Experiment::iters) {
    // Per-iteration aggregates; converged trials hold their final record.
    for (Receiver r : receivers) {
      int max_iter = 0;
      for (size_t i = 0; i < items.size(); ++i)
        if (items[i].rec == r && !results[i].empty())
          max_iter = std::max(max_iter, results[i].back().outer_iter);
      std::vector<Agg> per_iter(max_iter + 1);
      for (size_t i = 0; i < items.size(); ++i) {
        if (items[i].rec != r || results[i].empty()) continue;
        const auto& recs = results[i];
        size_t j = 0;
        for (int t = 0; t <= max_iter; ++t) {
          while (j + 1 < recs.size() && recs[j + 1].outer_iter <= t) ++j;
          per_iter[t].err += recs[j].bit_errors;
          per_iter[t].bits += recs[j].bits;
          per_iter[t].nmse_sum += recs[j].nmse;
          per_iter[t].trials += 1;
        }
      }
      for (int t = 0; t <= max_iter; ++t) {
        const Agg& a = per_iter[t];
        if (a.trials == 0) continue;
        res.rows.push_back({std::to_string(t), r,
                            static_cast<double>(a.err) / a.bits,
                            a.nmse_sum / a.trials, a.trials});
      }
    }
    return res;
  }

  for (int p = 0; p < static_cast<int>(points.size()); ++p) {
    for (Receiver r : receivers) {
      Agg a;
      for (size_t i = 0; i < items.size(); ++i) {
        if (items[i].point != p || items[i].rec != r || results[i].empty())
          continue;
        const MetricsRecord& last = results[i].back();
        a.err += last.bit_errors;
        a.bits += last.bits;
        a.nmse_sum += last.nmse;
        a.trials += 1;
      }
      if (a.trials == 0) continue;
      res.rows.push_back({points[p].key, r, static_cast<double>(a.err) / a.bits,
                          a.nmse_sum / a.trials, a.trials});
    }
  }
  return res;
}

void write_sweep_csv(const SweepResult& res, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  out << res.header << "\n";
  for (const SweepRow& row : res.rows)
    out << row.key << "," << receiver_name(row.receiver) << ","
        << fmt_num(row.ber) << "," << fmt_num(row.nmse) << "," << row.trials
        << "\n";
}

std::vector<EigenProbeRecord> eigen_probe(const Config& cfg, int trials,
                                          uint64_t seed) {
  struct Point {
    int n;
    double lambda;
  };
  std::vector<Point> pts;
  for (int n : {100, 200, 400, 800}) pts.push_back({n, cfg.channel.poisson_mean});
  for (double lam : {1.0, 3.0, 5.0, 13.0, 32.0, 80.0, 200.0, 500.0, 1200.0})
    pts.push_back({400, lam});

  std::vector<EigenProbeRecord> out;
  for (size_t p = 0; p < pts.size(); ++p) {
    SystemConfig sys = cfg.system;
    sys.n_subcarriers = pts[p].n;
    sys.pilot_indices = random_pilots(pts[p].n, std::max(2, pts[p].n / 6),
                                      mix_seed(seed, 1000 + p));
    sys.data_indices = data_indices_from_pilots(pts[p].n, sys.pilot_indices);
    ChannelConfig ch = cfg.channel;
    ch.poisson_mean = pts[p].lambda;
    const ConvCode code = make_code(sys);

    for (int t = 0; t < trials; ++t) {
      const uint64_t sb = mix_seed(seed, p * 100003 + t);
      Rng bit_rng(mix_seed(sb, 0));
      const BitVec u = random_bits(info_bits_per_frame(sys, code), bit_rng);
      const SymbolFrame frame = build_frame(sys, code, u, sys.pilot_seed);
      const MultipathChannel chan = draw_channel(ch, sys, mix_seed(sb, 1));
      const Observation obs = observe(frame.symbol_vector, chan.freq_response,
                                      15.0, mix_seed(sb, 2));

      SparseChannelEstimator est(sys, estimator_options(cfg.sim));
      est.reset(obs.y, known_symbol_moments(frame.symbol_vector));
      est.set_freeze_act_prob(true);
      est.inner_loop();

      std::vector<double> delays;
      for (int l : est.state().active_list())
        delays.push_back(est.state().delays[l]);
      EigenProbeRecord rec;
      rec.n = pts[p].n;
      rec.poisson_mean = pts[p].lambda;
      rec.trial = t;
      rec.lambda_max =
          delays.empty()
              ? 0.0
              : lambda_max_power(pts[p].n, sys.subcarrier_spacing, delays,
                                 est.state().noise_var, est.state().comp_var);
      out.push_back(rec);
    }
  }
  return out;
}

void write_eigen_csv(const std::vector<EigenProbeRecord>& recs,
                     const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  out << "n,poisson_mean,trial,lambda_max\n";
  for (const auto& r : recs)
    out << r.n << "," << fmt_num(r.poisson_mean) << "," << r.trial << ","
        << fmt_num(r.lambda_max) << "\n";
}

}  // namespace ofdm
