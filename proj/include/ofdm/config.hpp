#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ofdm/types.hpp"

namespace ofdm {

// OFDM system parameters. Subcarrier indices are 1-based (1..N).
struct SystemConfig {
  int n_subcarriers = 601;
  double subcarrier_spacing = 15e3;  // Hz
  double cyclic_prefix = 5.2e-6;     // seconds
  std::vector<int> pilot_indices;    // sorted, 1-based
  std::vector<int> data_indices;     // sorted, 1-based
  int bits_per_symbol = 8;           // Q, 256-QAM
  int code_poly_a = 0561;            // octal generators, rate 1/2
  int code_poly_b = 0753;
  uint64_t interleaver_seed = 1;
  uint64_t pilot_seed = 2;

  int n_pilots() const { return static_cast<int>(pilot_indices.size()); }
  int n_data() const { return static_cast<int>(data_indices.size()); }
};

struct ChannelConfig {
  double poisson_mean = 5.0;        // lambda
  double max_delay = 5.2e-6;        // tau_max, seconds
  double decay_constant = 1.5e-6;   // v, seconds
  double target_mean_gain = 1.0;    // E|h_i|^2
};

struct SimConfig {
  std::vector<double> snr_db_list = {18.0};
  int n_trials = 100;
  uint64_t master_seed = 0;
  int max_outer_iters = 50;
  int outer_patience = 10;
  int max_inner_iters = 50;
  double inner_tol = 1e-3;
  int grid_oversampling = 8;
  int n_components_max = 0;  // 0 means L = N
};

struct Config {
  SystemConfig system;
  ChannelConfig channel;
  SimConfig sim;
};

// Throws std::invalid_argument naming the violated invariant.
const Config& validate(const Config& cfg);

// Pilot placement {1, 1+d, ..., n} with constant spacing d = (n-1)/(n_pilots-1).
std::vector<int> equispaced_pilots(int n, int n_pilots);

// Seeded random placement including both band edges, pairwise spacing >= 2.
std::vector<int> random_pilots(int n, int n_pilots, uint64_t seed);

// Complement of the pilot set in {1..n}.
std::vector<int> data_indices_from_pilots(int n, const std::vector<int>& pilots);

// Table I defaults: N=601, 15 kHz spacing, 101 equispaced pilots, 256-QAM,
// (561,753)_8 code, lambda=5, tau_max=T_CP=5.2us, v=1.5us.
Config default_config();

// Flat key-value config file; unknown keys are an error.
Config load_config_file(const std::string& path);

}  // namespace ofdm
