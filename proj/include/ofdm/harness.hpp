#pragma once

#include <string>
#include <vector>

#include "ofdm/channel_model.hpp"
#include "ofdm/config.hpp"
#include "ofdm/decoder.hpp"
#include "ofdm/estimator.hpp"
#include "ofdm/reference_receivers.hpp"
#include "ofdm/tx_chain.hpp"
#include "ofdm/types.hpp"

namespace ofdm {

enum class Receiver { offgrid_bpmf, freq_lmmse, oracle };

const char* receiver_name(Receiver r);
bool receiver_from_name(const std::string& s, Receiver& out);

struct MetricsRecord {
  int trial = 0;
  Receiver receiver = Receiver::offgrid_bpmf;
  double snr_db = 0.0;
  int n_pilots = 0;
  double poisson_mean = 0.0;
  int outer_iter = 0;
  long bit_errors = 0;
  long bits = 0;
  double nmse = 0.0;  // ||h_hat - h||^2 / ||h||^2
  int l_hat = 0;
  double beta_hat = 0.0;
  double runtime_ms = 0.0;
};

struct TrialOptions {
  // Drop pilot observation factors from the estimator after the first
  // outer iteration (pilot-ablation experiment).
  bool ignore_pilots_after_first = false;
  // Shared precomputed covariance for the freq-LMMSE receiver; computed
  // locally when null.
  const RobustCovariance* cov = nullptr;
};

// Full tx -> channel -> receiver pipeline for one trial; one record per
// outer iteration (the oracle receiver is non-iterative and emits one).
// Deterministic given (config, receiver, snr_db, trial).
std::vector<MetricsRecord> run_trial(const Config& cfg, Receiver receiver,
                                     double snr_db, int trial,
                                     const TrialOptions& opts = {});

enum class Experiment { snr, pilots, numtaps, iters, pilot_ablation };

struct SweepRow {
  std::string key;      // sweep point label (value of the swept variable)
  Receiver receiver = Receiver::offgrid_bpmf;
  double ber = 0.0;
  double nmse = 0.0;
  int trials = 0;
};

struct SweepResult {
  std::string header;             // CSV header line
  std::vector<SweepRow> rows;
  std::vector<MetricsRecord> records;  // raw per-iteration records
};

// Monte Carlo sweep over the experiment's variable; per-trial work items run
// on up to n_threads workers with trial-indexed RNG streams.
SweepResult sweep(Experiment exp, const Config& cfg,
                  const std::vector<Receiver>& receivers, int n_threads = 1);

void write_sweep_csv(const SweepResult& res, const std::string& path);

struct EigenProbeRecord {
  int n = 0;
  double poisson_mean = 0.0;
  int trial = 0;
  double lambda_max = 0.0;
};

// Largest eigenvalue of T = beta^-1 eta Psi Psi^H over random estimator
// snapshots (known symbols, 15 dB): N sweep at fixed multipath count and
// multipath-count sweep at fixed N.
std::vector<EigenProbeRecord> eigen_probe(const Config& cfg, int trials,
                                          uint64_t seed);

void write_eigen_csv(const std::vector<EigenProbeRecord>& recs,
                     const std::string& path);

int cli(int argc, char** argv);

}  // namespace ofdm
