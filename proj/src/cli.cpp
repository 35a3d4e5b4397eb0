#include <cmath>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ofdm/harness.hpp"
#include "ofdm/linear_solver.hpp"

namespace ofdm {

namespace {

Config small_config() {
  Config cfg = default_config();
  cfg.system.n_subcarriers = 61;
  cfg.system.pilot_indices = equispaced_pilots(61, 13);
  cfg.system.data_indices =
      data_indices_from_pilots(61, cfg.system.pilot_indices);
  cfg.sim.max_outer_iters = 10;
  cfg.sim.outer_patience = 3;
  return cfg;
}

int selftest() {
  int failures = 0;
  auto check = [&](bool ok, const char* what) {
    std::cout << (ok ? "pass" : "FAIL") << ": " << what << "\n";
    if (!ok) ++failures;
  };

  {
    const cvec psi = steering(64, 15e3, 2.3e-6);
    double worst = 0.0;
    for (int k = 0; k < 64; ++k)
      worst = std::max(worst, std::abs(std::abs(psi[k]) - 1.0));
    check(worst < 1e-12, "steering vectors have unit modulus");
  }
  {
    cvec a = cvec::Random(16);
    auto ident = [](const cvec& x, cvec& out) { out = x; };
    const CgResult r = cg_solve(ident, a, 1e-12, 10);
    check(r.converged && r.iterations <= 1 && (r.z - a).norm() < 1e-12,
          "conjugate gradient solves the identity in one step");
  }
  {
    Rng rng(123);
    double acc = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) acc += zero_truncated_poisson(5.0, rng);
    const double mean = acc / n;
    check(std::abs(mean - 5.0339) < 0.15, "zero-truncated Poisson mean near 5.034");
  }
  {
    const Config cfg = small_config();
    const SystemConfig& sys = cfg.system;
    ConvCode code;
    code.poly_a = sys.code_poly_a;
    code.poly_b = sys.code_poly_b;
    const Bcjr bcjr(code);
    Rng rng(7);
    const BitVec u = random_bits(info_bits_per_frame(sys, code), rng);
    const SymbolFrame frame = build_frame(sys, code, u, sys.pilot_seed);
    const cvec h = cvec::Ones(sys.n_subcarriers);
    const Observation obs = observe(frame.symbol_vector, h, 30.0, 99);
    const SoftInfo soft = decode_pass(obs.y, h, h.cwiseAbs2(), obs.noise_var,
                                      sys, code, bcjr, 1);
    long err = 0;
    for (size_t i = 0; i < u.size(); ++i) err += u[i] != soft.info_bits_hat[i];
    check(err == 0, "genie-channel decode at 30 dB is error-free");
  }
  {
    const Config cfg = small_config();
    const auto a = run_trial(cfg, Receiver::offgrid_bpmf, 18.0, 0);
    const auto b = run_trial(cfg, Receiver::offgrid_bpmf, 18.0, 0);
    bool same = a.size() == b.size();
    for (size_t i = 0; same && i < a.size(); ++i)
      same = a[i].bit_errors == b[i].bit_errors && a[i].nmse == b[i].nmse &&
             a[i].l_hat == b[i].l_hat && a[i].beta_hat == b[i].beta_hat;
    check(same && !a.empty(), "off-grid trial is deterministic under the seed");
  }
  {
    const double tau0 = 1.7e-6;
    const int n = 128;
    const cvec r = steering(n, 15e3, tau0);
    Periodogram per(n, 15e3, 5.2e-6, 8);
    const double tau_hat = per.peak(r);
    check(std::abs(tau_hat - tau0) <= 1.0 / (n * 15e3) / 8.0 + 1e-12,
          "periodogram peak locates a single component");
  }

  std::cout << (failures == 0 ? "selftest passed" : "selftest FAILED") << "\n";
  return failures == 0 ? 0 : 1;
}

}  // namespace

int cli(int argc, char** argv) {
  CLI::App app{"Link-level OFDM Monte Carlo simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_path = "out.csv";
  std::string receiver_str = "all";
  uint64_t seed = 0;
  int trials = 0;
  int parallel = 1;

  std::vector<std::pair<CLI::App*, Experiment>> sim_cmds;
  auto add_common = [&](CLI::App* c) {
    c->add_option("--config", config_path, "key=value config file");
    c->add_option("--seed", seed, "master RNG seed");
    c->add_option("--trials", trials, "trials per sweep point");
    c->add_option("--out", out_path, "output CSV path");
    c->add_option("--receiver", receiver_str,
                  "offgrid_bpmf | freq_lmmse | oracle | all");
    c->add_option("--parallel", parallel, "worker threads");
  };

  CLI::App* sim = app.add_subcommand("sim", "Monte Carlo sweeps");
  sim->require_subcommand(1);
  sim_cmds = {
      {sim->add_subcommand("snr", "BER/NMSE vs SNR"), Experiment::snr},
      {sim->add_subcommand("pilots", "BER/NMSE vs pilot count"),
       Experiment::pilots},
      {sim->add_subcommand("numtaps", "BER/NMSE vs multipath count"),
       Experiment::numtaps},
      {sim->add_subcommand("iters", "BER/NMSE vs outer iteration"),
       Experiment::iters},
      {sim->add_subcommand("pilot-ablation",
                           "pilots kept vs dropped after first iteration"),
       Experiment::pilot_ablation},
  };
  for (auto& [cmd, exp] : sim_cmds) add_common(cmd);

  CLI::App* probe = app.add_subcommand("probe", "diagnostic probes");
  probe->require_subcommand(1);
  CLI::App* probe_eigen =
      probe->add_subcommand("eigen", "largest-eigenvalue samples of T");
  add_common(probe_eigen);

  CLI::App* self = app.add_subcommand("selftest", "built-in property checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help() << "\n";
    return 2;
  }

  try {
    if (self->parsed()) return selftest();

    Config cfg = config_path.empty() ? default_config()
                                     : load_config_file(config_path);
    CLI::App* leaf = probe_eigen->parsed() ? probe_eigen : nullptr;
    Experiment exp = Experiment::snr;
    for (auto& [cmd, e] : sim_cmds) {
      if (cmd->parsed()) {
        leaf = cmd;
        exp = e;
      }
    }
    if (leaf->count("--seed")) cfg.sim.master_seed = seed;
    if (leaf->count("--trials")) cfg.sim.n_trials = trials;
    if (cfg.sim.n_trials <= 0)
      throw std::invalid_argument("n_trials must be positive");

    if (probe_eigen->parsed()) {
      const int n = leaf->count("--trials") ? trials : 20;
      const auto recs = eigen_probe(cfg, n, cfg.sim.master_seed);
      write_eigen_csv(recs, out_path);
      return 0;
    }

    if (exp == Experiment::snr && config_path.empty() &&
        cfg.sim.snr_db_list.size() == 1)
      cfg.sim.snr_db_list = {12.0, 14.0, 16.0, 18.0, 20.0};

    std::vector<Receiver> receivers;
    if (receiver_str == "all") {
      if (exp == Experiment::snr || exp == Experiment::pilots)
        receivers = {Receiver::offgrid_bpmf, Receiver::freq_lmmse,
                     Receiver::oracle};
      else
        receivers = {Receiver::offgrid_bpmf};
    } else {
      Receiver r;
      if (!receiver_from_name(receiver_str, r))
        throw std::invalid_argument("unknown receiver: " + receiver_str);
      receivers = {r};
    }

    const SweepResult res = sweep(exp, cfg, receivers, parallel);
    write_sweep_csv(res, out_path);
    return 0;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid config: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace ofdm
