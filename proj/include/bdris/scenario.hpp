#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace bdris {

using Point = Eigen::Vector2d;

/// One reflecting surface: its planar position and element count. A
/// centralized deployment has one surface; a distributed one has several, and
/// the joint reflection matrix is block diagonal with one unitary block per
/// surface.
struct RisSurface {
  Point position{300.0, 0.0};
  int elements = 20;
};

/// Full description of a multi-cell downlink scenario. Powers are stored in
/// linear milliwatts; the loader converts from dBm.
struct ScenarioConfig {
  int num_cells = 2;
  int users_per_cell = 2;
  int tx_antennas = 4;
  int rx_antennas = 2;
  int num_streams = 2;

  std::vector<double> tx_power_mw;  // one entry per BS
  double noise_power_mw = 0.0;
  std::vector<double> weights;  // row-major (cell, user)

  std::vector<Point> bs_positions;
  std::vector<RisSurface> surfaces;
  std::vector<Point> user_disk_centers;  // one per cell
  double user_disk_radius = 20.0;

  double pathloss_ref_db = 30.0;
  double pathloss_exp_direct = 3.75;
  double pathloss_exp_ris = 2.2;
  double rician_factor = 3.0;  // linear

  std::uint64_t rng_seed = 1;

  int num_users() const { return num_cells * users_per_cell; }
  int user_index(int cell, int user) const {
    return cell * users_per_cell + user;
  }
  int ris_elements() const;
  double weight(int cell, int user) const {
    return weights[static_cast<std::size_t>(user_index(cell, user))];
  }
  std::vector<int> surface_sizes() const;

  /// Sets every BS budget to the same value in dBm.
  void set_tx_power_dbm(double dbm);
  /// Resizes a single-surface deployment to `m` elements.
  void set_ris_elements(int m);

  /// Throws ConfigError on any violated invariant.
  void validate() const;
};

/// L=2, K=2, Nt=4, Nr=2, Ns=2, M=20, P=30 dBm, noise -104 dBm, BSs at
/// [0,0] and [600,0], one surface at [300,0], user disks of radius 20 m at
/// [280,0] and [320,0], unit weights.
ScenarioConfig default_scenario();

/// Distributed variant of `base`: two surfaces of M/2 elements at [5,0] and
/// [595,0]. Throws ConfigError for odd M.
ScenarioConfig distributed_scenario(const ScenarioConfig& base);

/// Parses a JSON scenario document. Missing keys keep the defaults of
/// default_scenario(). See README for the schema.
ScenarioConfig load_scenario(const std::filesystem::path& path);
ScenarioConfig parse_scenario(const std::string& json_text);

}  // namespace bdris
