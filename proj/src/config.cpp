#include "ofdm/config.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

namespace ofdm {

namespace {

void fail(const std::string& what) { throw std::invalid_argument(what); }

std::vector<double> parse_double_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) out.push_back(std::stod(tok));
  }
  return out;
}

}  // namespace

const Config& validate(const Config& cfg) {
  const SystemConfig& sys = cfg.system;
  if (sys.n_subcarriers <= 0) fail("n_subcarriers must be positive");
  if (sys.subcarrier_spacing <= 0.0) fail("subcarrier_spacing must be positive");
  if (sys.cyclic_prefix <= 0.0) fail("cyclic_prefix must be positive");
  if (sys.bits_per_symbol != 8) fail("bits_per_symbol must be 8 (256-QAM)");

  std::set<int> pilots(sys.pilot_indices.begin(), sys.pilot_indices.end());
  std::set<int> data(sys.data_indices.begin(), sys.data_indices.end());
  if (pilots.size() != sys.pilot_indices.size()) fail("duplicate pilot indices");
  if (data.size() != sys.data_indices.size()) fail("duplicate data indices");
  for (int j : pilots) {
    if (data.count(j)) fail("overlapping index sets");
  }
  if (static_cast<int>(pilots.size() + data.size()) != sys.n_subcarriers)
    fail("pilot and data sets must partition {1..N}");
  for (int j : pilots)
    if (j < 1 || j > sys.n_subcarriers) fail("pilot index out of range");
  for (int i : data)
    if (i < 1 || i > sys.n_subcarriers) fail("data index out of range");

  const ChannelConfig& ch = cfg.channel;
  if (ch.poisson_mean <= 0.0) fail("poisson_mean must be positive");
  if (ch.max_delay <= 0.0) fail("max_delay must be positive");
  if (ch.max_delay > sys.cyclic_prefix) fail("max delay exceeds cyclic prefix");
  if (ch.decay_constant <= 0.0) fail("decay_constant must be positive");

  const SimConfig& sim = cfg.sim;
  if (sim.n_trials <= 0) fail("n_trials must be positive");
  if (sim.max_outer_iters <= 0) fail("max_outer_iters must be positive");
  if (sim.outer_patience <= 0) fail("outer_patience must be positive");
  if (sim.max_inner_iters <= 0) fail("max_inner_iters must be positive");
  if (sim.inner_tol <= 0.0) fail("inner_tol must be positive");
  if (sim.grid_oversampling <= 0) fail("grid_oversampling must be positive");
  if (sim.n_components_max < 0) fail("n_components_max must be nonnegative");
  if (sim.snr_db_list.empty()) fail("snr_db_list must be nonempty");
  return cfg;
}

std::vector<int> equispaced_pilots(int n, int n_pilots) {
  if (n_pilots < 2) fail("need at least 2 pilots");
  if ((n - 1) % (n_pilots - 1) != 0)
    fail("(n-1) not divisible by (n_pilots-1)");
  const int spacing = (n - 1) / (n_pilots - 1);
  std::vector<int> out(n_pilots);
  for (int k = 0; k < n_pilots; ++k) out[k] = 1 + k * spacing;
  return out;
}

std::vector<int> random_pilots(int n, int n_pilots, uint64_t seed) {
  if (n_pilots < 2 || n_pilots > n) fail("n_pilots out of range");
  // Min spacing 2 needs n_pilots <= (n+1)/2.
  if (2 * (n_pilots - 1) > n - 1) fail("infeasible spacing constraint");
  Rng rng(mix_seed(seed, 0x70696c6f74ULL));
  // Gap transform: q_k = p_k - 2k maps spacing-2 sets onto sorted draws from
  // [1, n - 2(n_pilots-1)] with endpoints q_0 = 1, q_last = R.
  const int r = n - 2 * (n_pilots - 1);
  std::uniform_int_distribution<int> qdist(1, r);
  std::vector<int> q(n_pilots);
  q.front() = 1;
  q.back() = r;
  for (int k = 1; k < n_pilots - 1; ++k) q[k] = qdist(rng);
  std::sort(q.begin() + 1, q.end() - 1);
  std::vector<int> out(n_pilots);
  for (int k = 0; k < n_pilots; ++k) out[k] = q[k] + 2 * k;
  return out;
}

std::vector<int> data_indices_from_pilots(int n, const std::vector<int>& pilots) {
  std::set<int> p(pilots.begin(), pilots.end());
  std::vector<int> out;
  out.reserve(n - p.size());
  for (int i = 1; i <= n; ++i)
    if (!p.count(i)) out.push_back(i);
  return out;
}

Config default_config() {
  Config cfg;
  cfg.system.pilot_indices = equispaced_pilots(601, 101);
  cfg.system.data_indices =
      data_indices_from_pilots(601, cfg.system.pilot_indices);
  return cfg;
}

Config load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open config file: " + path);
  Config cfg = default_config();
  int n_pilots = 101;
  std::string pilot_pattern = "equispaced";
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
      fail("malformed config line " + std::to_string(lineno));
    }
    auto trim = [](std::string s) {
      auto b = s.find_first_not_of(" \t\r\n");
      auto e = s.find_last_not_of(" \t\r\n");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (key == "n_subcarriers") cfg.system.n_subcarriers = std::stoi(val);
    else if (key == "subcarrier_spacing_hz") cfg.system.subcarrier_spacing = std::stod(val);
    else if (key == "cyclic_prefix_s") cfg.system.cyclic_prefix = std::stod(val);
    else if (key == "n_pilots") n_pilots = std::stoi(val);
    else if (key == "pilot_pattern") pilot_pattern = val;
    else if (key == "bits_per_symbol") cfg.system.bits_per_symbol = std::stoi(val);
    else if (key == "code_poly_a_octal") cfg.system.code_poly_a = std::stoi(val, nullptr, 8);
    else if (key == "code_poly_b_octal") cfg.system.code_poly_b = std::stoi(val, nullptr, 8);
    else if (key == "interleaver_seed") cfg.system.interleaver_seed = std::stoull(val);
    else if (key == "pilot_seed") cfg.system.pilot_seed = std::stoull(val);
    else if (key == "poisson_mean") cfg.channel.poisson_mean = std::stod(val);
    else if (key == "max_delay_s") cfg.channel.max_delay = std::stod(val);
    else if (key == "decay_constant_s") cfg.channel.decay_constant = std::stod(val);
    else if (key == "snr_db_list") cfg.sim.snr_db_list = parse_double_list(val);
    else if (key == "n_trials") cfg.sim.n_trials = std::stoi(val);
    else if (key == "master_seed") cfg.sim.master_seed = std::stoull(val);
    else if (key == "max_outer_iters") cfg.sim.max_outer_iters = std::stoi(val);
    else if (key == "outer_patience") cfg.sim.outer_patience = std::stoi(val);
    else if (key == "max_inner_iters") cfg.sim.max_inner_iters = std::stoi(val);
    else if (key == "inner_tol") cfg.sim.inner_tol = std::stod(val);
    else if (key == "grid_oversampling") cfg.sim.grid_oversampling = std::stoi(val);
    else if (key == "n_components_max") cfg.sim.n_components_max = std::stoi(val);
    else fail("unknown config key: " + key);
  }
  if (pilot_pattern == "equispaced")
    cfg.system.pilot_indices = equispaced_pilots(cfg.system.n_subcarriers, n_pilots);
  else if (pilot_pattern == "random")
    cfg.system.pilot_indices =
        random_pilots(cfg.system.n_subcarriers, n_pilots, cfg.system.pilot_seed);
  else
    fail("unknown pilot_pattern: " + pilot_pattern);
  cfg.system.data_indices =
      data_indices_from_pilots(cfg.system.n_subcarriers, cfg.system.pilot_indices);
  return validate(cfg), cfg;
}

}  // namespace ofdm
