#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ddkl/graph.hpp"
#include "ddkl/mpc.hpp"
#include "ddkl/train.hpp"
#include "ddkl/vessel.hpp"

namespace ddkl {

// Whole-experiment configuration, one JSON file with one object per section.
// Every field has a documented default; absent fields take defaults, unknown
// fields are rejected so typos cannot silently change an experiment.
struct ExperimentConfig {
  VesselParams vessel{};

  struct Data {
    int T = 5000;
    double dt = 0.02;
    double sigma = 0.5;  // stddev of the exploration input
    int hold = 10;       // steps each random input is held
    std::uint64_t seed = 12345;
    std::vector<std::pair<int, int>> intervals = {
        {0, 600}, {600, 1600}, {1600, 2800}, {2800, 3600}, {3600, 4000}};
    int train_end = 4000;
    int test_end = 5000;
  } data;

  struct GraphSection {
    int n_agents = 5;
    // 1-indexed endpoints as written in the file; default 5-ring
    std::vector<std::pair<int, int>> edges = {
        {1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 1}};
  } graph;

  struct Lift {
    int r = 8;
    int hidden = 256;
    bool normalize = false;  // fit a shared velocity scaler on the training slice
  } lift;

  struct Consensus {
    double c = 1.0;
    std::string weights = "uniform";  // edge weights w_ij (only uniform mode)
    int matrix_rounds = 200;          // S
    bool log_oracle_dist = true;
    std::string loss_weighting = "uniform";  // oracle weighting in logs
  } consensus;

  struct Theta {
    double alpha = 1e-4;
    int theta_rounds = 100;  // S_bar
    int outer_rounds = 50;   // R
    double threshold = 7e-6;
    long max_theta_steps = 200000;
    std::string rule = "adam";  // | "subgradient"
    std::string mixing = "metropolis";  // | "uniform-rows"
    std::uint64_t theta_seed = 2024;
    std::uint64_t matrix_seed = 7;
    int n_runs = 10;
    long dko_max_steps = 5000;
    std::string dko_init = "ls";  // | "random"
    long mlp_max_steps = 5000;
  } theta;

  struct Mpc {
    MpcConfig solver{};
    Vector6d x0 = (Vector6d() << 20.0, 10.0, 1.0471975511965977, 0, 0, 0).finished();
    Vector6d goal = (Vector6d() << 0.0, 0.0, 1.5707963267948966, 0, 0, 0).finished();
    int max_steps = 500;
  } mpc;

  struct Paths {
    std::string out_dir = "out";
    std::string trajectory = "out/trajectory.csv";
  } paths;

  void validate() const;  // throws ConfigError with "section.field"

  // Canonical serialization (sorted keys, full precision); equal configs
  // produce equal strings, so its FNV-1a hash tags all outputs.
  std::string canonical_json() const;
  std::string config_hash() const;

  Graph build_graph() const;
  TrainConfig train_config() const;  // scaler left identity; see fit_scaler
};

// Parses strict JSON; defaults fill absent fields. Throws ConfigError with a
// line-anchored message on syntax errors, unknown keys, or bad values.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& text);

// The shipped default configuration, serialized.
std::string default_config_json();

// Shared velocity scaler fit on the training slice (used when lift.normalize
// is set; identity otherwise).
Scaler fit_scaler(const ExperimentConfig& cfg, const Trajectory& traj);

}  // namespace ddkl
