#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "ofdm/harness.hpp"

using namespace ofdm;

namespace {

Config small_config() {
  Config cfg = default_config();
  cfg.system.n_subcarriers = 61;
  cfg.system.pilot_indices = equispaced_pilots(61, 13);
  cfg.system.data_indices =
      data_indices_from_pilots(61, cfg.system.pilot_indices);
  cfg.sim.max_outer_iters = 8;
  cfg.sim.outer_patience = 3;
  cfg.sim.snr_db_list = {18.0};
  cfg.sim.n_trials = 3;
  return cfg;
}

bool same_records(const std::vector<MetricsRecord>& a,
                  const std::vector<MetricsRecord>& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i].bit_errors != b[i].bit_errors || a[i].bits != b[i].bits ||
        a[i].nmse != b[i].nmse || a[i].l_hat != b[i].l_hat ||
        a[i].beta_hat != b[i].beta_hat || a[i].outer_iter != b[i].outer_iter)
      return false;
  }
  return true;
}

int run_cli(const std::vector<std::string>& args) {
  std::vector<std::string> full = {"ofdm_sim"};
  full.insert(full.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : full) argv.push_back(s.data());
  return cli(static_cast<int>(argv.size()), argv.data());
}

std::string temp_path(const char* name) {
  return std::string("./") + name;
}

}  // namespace

TEST_CASE("trials are deterministic under the seed") {
  const Config cfg = small_config();
  for (Receiver r :
       {Receiver::offgrid_bpmf, Receiver::freq_lmmse, Receiver::oracle}) {
    const auto a = run_trial(cfg, r, 18.0, 4);
    const auto b = run_trial(cfg, r, 18.0, 4);
    CHECK(!a.empty());
    CHECK(same_records(a, b));
  }
  // Different trial index gives a different channel/noise realization.
  const auto a = run_trial(cfg, Receiver::oracle, 18.0, 0);
  const auto b = run_trial(cfg, Receiver::oracle, 18.0, 1);
  CHECK(a.front().nmse != b.front().nmse);
}

TEST_CASE("oracle receiver at high snr is nearly error free") {
  const Config cfg = small_config();
  long errors = 0, bits = 0;
  for (int t = 0; t < 20; ++t) {
    const auto recs = run_trial(cfg, Receiver::oracle, 30.0, t);
    REQUIRE(recs.size() == 1);
    errors += recs[0].bit_errors;
    bits += recs[0].bits;
    CHECK(recs[0].nmse < 1e-2);
    CHECK(recs[0].l_hat >= 1);
  }
  CHECK(double(errors) / bits < 0.01);
}

TEST_CASE("off-grid trial record bookkeeping") {
  const Config cfg = small_config();
  const auto recs = run_trial(cfg, Receiver::offgrid_bpmf, 20.0, 2);
  REQUIRE(!recs.empty());
  CHECK(int(recs.size()) <= cfg.sim.max_outer_iters);
  for (size_t i = 0; i < recs.size(); ++i) {
    const MetricsRecord& r = recs[i];
    CHECK(r.outer_iter == int(i));
    CHECK(r.trial == 2);
    CHECK(r.snr_db == 20.0);
    CHECK(r.n_pilots == 13);
    CHECK(r.poisson_mean == 5.0);
    CHECK(r.bits > 0);
    CHECK(r.bit_errors >= 0);
    CHECK(r.bit_errors <= r.bits);
    CHECK(r.beta_hat > 0.0);
    CHECK(std::isfinite(r.nmse));
    if (i > 0) CHECK(r.runtime_ms >= recs[i - 1].runtime_ms);
  }
  CHECK(recs.back().l_hat >= 1);
}

TEST_CASE("sweep aggregates match the raw records") {
  const Config cfg = small_config();
  const SweepResult res =
      sweep(Experiment::snr, cfg, {Receiver::offgrid_bpmf}, 1);
  CHECK(res.header == "snr_db,receiver,ber,nmse,trials");
  REQUIRE(res.rows.size() == 1);
  CHECK(res.rows[0].trials == cfg.sim.n_trials);

  long err = 0, bits = 0;
  double nmse = 0.0;
  int n_last = 0;
  for (size_t i = 0; i < res.records.size(); ++i) {
    const bool last = i + 1 == res.records.size() ||
                      res.records[i + 1].outer_iter <= res.records[i].outer_iter;
    if (!last) continue;
    err += res.records[i].bit_errors;
    bits += res.records[i].bits;
    nmse += res.records[i].nmse;
    ++n_last;
  }
  CHECK(n_last == cfg.sim.n_trials);
  CHECK(res.rows[0].ber == double(err) / bits);
  CHECK(res.rows[0].nmse == doctest::Approx(nmse / n_last).epsilon(1e-15));
}

TEST_CASE("parallel sweep equals the serial sweep") {
  Config cfg = small_config();
  cfg.sim.n_trials = 4;
  const SweepResult serial =
      sweep(Experiment::snr, cfg, {Receiver::offgrid_bpmf, Receiver::oracle}, 1);
  const SweepResult parallel =
      sweep(Experiment::snr, cfg, {Receiver::offgrid_bpmf, Receiver::oracle}, 2);
  REQUIRE(serial.rows.size() == parallel.rows.size());
  for (size_t i = 0; i < serial.rows.size(); ++i) {
    CHECK(serial.rows[i].key == parallel.rows[i].key);
    CHECK(serial.rows[i].ber == parallel.rows[i].ber);
    CHECK(serial.rows[i].nmse == parallel.rows[i].nmse);
    CHECK(serial.rows[i].trials == parallel.rows[i].trials);
  }
  CHECK(same_records(serial.records, parallel.records));
}

TEST_CASE("experiment key columns") {
  Config cfg = small_config();
  cfg.sim.n_trials = 1;
  cfg.sim.max_outer_iters = 3;
  CHECK(sweep(Experiment::pilots, cfg, {Receiver::offgrid_bpmf}, 1).header ==
        "n_pilots,receiver,ber,nmse,trials");
  CHECK(sweep(Experiment::iters, cfg, {Receiver::offgrid_bpmf}, 1).header ==
        "outer_iter,receiver,ber,nmse,trials");
  const SweepResult ab =
      sweep(Experiment::pilot_ablation, cfg, {Receiver::offgrid_bpmf}, 1);
  CHECK(ab.header == "variant,receiver,ber,nmse,trials");
  REQUIRE(ab.rows.size() == 2);
  CHECK(ab.rows[0].key == "always_pilots");
  CHECK(ab.rows[1].key == "ignore_after_first");
}

TEST_CASE("iteration sweep extends converged trials") {
  Config cfg = small_config();
  cfg.sim.n_trials = 2;
  const SweepResult res =
      sweep(Experiment::iters, cfg, {Receiver::offgrid_bpmf}, 1);
  REQUIRE(!res.rows.empty());
  // Every iteration row aggregates all trials (converged ones carried forward).
  for (const SweepRow& row : res.rows) CHECK(row.trials == 2);
  int prev = -1;
  for (const SweepRow& row : res.rows) {
    const int it = std::stoi(row.key);
    CHECK(it == prev + 1);
    prev = it;
  }
}

TEST_CASE("csv writers") {
  SweepResult res;
  res.header = "snr_db,receiver,ber,nmse,trials";
  res.rows.push_back({"18", Receiver::oracle, 0.012345, 0.001, 7});
  const std::string path = temp_path("harness_sweep_test.csv");
  write_sweep_csv(res, path);
  std::ifstream in(path);
  REQUIRE(in.good());
  std::string line;
  std::getline(in, line);
  CHECK(line == "snr_db,receiver,ber,nmse,trials");
  std::getline(in, line);
  CHECK(line.rfind("18,oracle,0.012345", 0) == 0);
  std::remove(path.c_str());

  std::vector<EigenProbeRecord> recs = {{400, 5.0, 0, 123.5}};
  const std::string epath = temp_path("harness_eigen_test.csv");
  write_eigen_csv(recs, epath);
  std::ifstream ein(epath);
  REQUIRE(ein.good());
  std::getline(ein, line);
  CHECK(line == "n,poisson_mean,trial,lambda_max");
  std::getline(ein, line);
  CHECK(line == "400,5,0,123.5");
  std::remove(epath.c_str());

  CHECK_THROWS(write_sweep_csv(res, "./no_such_dir_xyz/out.csv"));
}

TEST_CASE("receiver names round trip") {
  for (Receiver r :
       {Receiver::offgrid_bpmf, Receiver::freq_lmmse, Receiver::oracle}) {
    Receiver back;
    REQUIRE(receiver_from_name(receiver_name(r), back));
    CHECK(back == r);
  }
  Receiver r;
  CHECK(receiver_from_name("offgrid", r));
  CHECK(r == Receiver::offgrid_bpmf);
  CHECK_FALSE(receiver_from_name("bogus", r));
}

TEST_CASE("cli exit codes") {
  // Unknown flag -> usage error.
  CHECK(run_cli({"sim", "snr", "--bogus-flag"}) == 2);
  CHECK(run_cli({"nonexistent-subcommand"}) == 2);

  // Invalid configuration -> 1.
  const std::string bad = temp_path("harness_bad_config.cfg");
  {
    std::ofstream out(bad);
    out << "n_subcarriers = 0\n";
  }
  CHECK(run_cli({"sim", "snr", "--config", bad}) == 1);
  std::remove(bad.c_str());
  CHECK(run_cli({"sim", "snr", "--receiver", "bogus", "--trials", "1"}) == 1);

  // Valid small run -> 0 and a CSV with the right header.
  const std::string cfg_path = temp_path("harness_small.cfg");
  {
    std::ofstream out(cfg_path);
    out << "n_subcarriers = 61\n"
        << "n_pilots = 13\n"
        << "n_trials = 2\n"
        << "snr_db_list = 18\n"
        << "max_outer_iters = 4\n"
        << "outer_patience = 2\n";
  }
  const std::string out_csv = temp_path("harness_cli_out.csv");
  CHECK(run_cli({"sim", "snr", "--config", cfg_path, "--receiver", "offgrid",
                 "--out", out_csv}) == 0);
  std::ifstream in(out_csv);
  REQUIRE(in.good());
  std::string line;
  std::getline(in, line);
  CHECK(line == "snr_db,receiver,ber,nmse,trials");
  int data_lines = 0;
  while (std::getline(in, line))
    if (!line.empty()) ++data_lines;
  CHECK(data_lines == 1);
  std::remove(cfg_path.c_str());
  std::remove(out_csv.c_str());
}
