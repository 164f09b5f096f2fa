#pragma once

#include <random>
#include <vector>

#include "bdris/linalg.hpp"
#include "bdris/scenario.hpp"

namespace bdris {

using Rng = std::mt19937_64;

/// One realization of every link in the network.
///
/// direct(bs, cell, user)  : Nr x Nt, BS `bs` -> user `user` of cell `cell`
/// bs_to_ris(bs)           : M x Nt
/// ris_to_user(cell, user) : Nr x M
///
/// With several surfaces, T stacks the per-surface rows and R the
/// per-surface columns in surface order.
class ChannelSet {
 public:
  ChannelSet() = default;
  ChannelSet(int num_cells, int users_per_cell, int tx_antennas,
             int rx_antennas, int ris_elements);

  int num_cells() const { return num_cells_; }
  int users_per_cell() const { return users_per_cell_; }
  int tx_antennas() const { return tx_antennas_; }
  int rx_antennas() const { return rx_antennas_; }
  int ris_elements() const { return ris_elements_; }

  CMatrix& direct(int bs, int cell, int user);
  const CMatrix& direct(int bs, int cell, int user) const;
  CMatrix& bs_to_ris(int bs);
  const CMatrix& bs_to_ris(int bs) const;
  CMatrix& ris_to_user(int cell, int user);
  const CMatrix& ris_to_user(int cell, int user) const;

  /// Planar user positions, indexed like ris_to_user.
  std::vector<Point> user_positions;

  /// Throws DimensionError / NumericalError on shape or finiteness problems.
  void validate() const;

  /// Copy with every RIS link zeroed.
  ChannelSet without_ris() const;

  /// Single-cell view of cell `cell`: only its own BS and users.
  ChannelSet single_cell(int cell) const;

 private:
  std::size_t direct_index(int bs, int cell, int user) const;

  int num_cells_ = 0;
  int users_per_cell_ = 0;
  int tx_antennas_ = 0;
  int rx_antennas_ = 0;
  int ris_elements_ = 0;
  std::vector<CMatrix> direct_;
  std::vector<CMatrix> bs_to_ris_;
  std::vector<CMatrix> ris_to_user_;
};

/// ref_db + 10 * exponent * log10(d), with d clamped to at least 1 m.
double path_loss_db(double distance, double exponent, double ref_db);

/// i.i.d. CN(0, 10^(-PL/10)) entries. PL = +inf yields zeros.
CMatrix gen_rayleigh(int rows, int cols, double pathloss_db, Rng& rng);

/// scale * (sqrt(k/(1+k)) * los + sqrt(1/(1+k)) * nlos), nlos ~ CN(0,1).
CMatrix gen_rician(int rows, int cols, double pathloss_db, double rician_k,
                   const CMatrix& los, Rng& rng);

/// Rank-one LOS matrix a_rx * a_tx^H between two half-wavelength ULAs laid
/// along the y-axis. Entries are unit modulus; a link along the x-axis gives
/// the all-ones matrix.
CMatrix los_steering(const Point& tx, const Point& rx, int rows, int cols);

/// Uniform user drops in each cell's disk followed by Rayleigh direct links
/// and Rician RIS links. User positions are drawn first, so two scenarios that
/// share seed and user geometry share user positions.
ChannelSet draw_scenario(const ScenarioConfig& config, Rng& rng);

inline constexpr double kUnitaryTolerance = 1e-8;

/// H = Hbar + R * Phi * T. With `check_unitary`, a reflection farther than
/// kUnitaryTolerance from the unitary group raises NumericalError.
CMatrix effective_channel(const CMatrix& direct, const CMatrix& ris_to_user,
                          const CMatrix& phi, const CMatrix& bs_to_ris,
                          bool check_unitary = true);

}  // namespace bdris
