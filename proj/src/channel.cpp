#include "bdris/channel.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace bdris {

ChannelSet::ChannelSet(int num_cells, int users_per_cell, int tx_antennas,
                       int rx_antennas, int ris_elements)
    : num_cells_(num_cells),
      users_per_cell_(users_per_cell),
      tx_antennas_(tx_antennas),
      rx_antennas_(rx_antennas),
      ris_elements_(ris_elements) {
  const auto users = static_cast<std::size_t>(num_cells * users_per_cell);
  direct_.assign(static_cast<std::size_t>(num_cells) * users,
                 CMatrix::Zero(rx_antennas, tx_antennas));
  bs_to_ris_.assign(static_cast<std::size_t>(num_cells),
                    CMatrix::Zero(ris_elements, tx_antennas));
  ris_to_user_.assign(users, CMatrix::Zero(rx_antennas, ris_elements));
  user_positions.assign(users, Point::Zero());
}

std::size_t ChannelSet::direct_index(int bs, int cell, int user) const {
  return static_cast<std::size_t>((bs * num_cells_ + cell) * users_per_cell_ +
                                  user);
}

CMatrix& ChannelSet::direct(int bs, int cell, int user) {
  return direct_[direct_index(bs, cell, user)];
}
const CMatrix& ChannelSet::direct(int bs, int cell, int user) const {
  return direct_[direct_index(bs, cell, user)];
}
CMatrix& ChannelSet::bs_to_ris(int bs) {
  return bs_to_ris_[static_cast<std::size_t>(bs)];
}
const CMatrix& ChannelSet::bs_to_ris(int bs) const {
  return bs_to_ris_[static_cast<std::size_t>(bs)];
}
CMatrix& ChannelSet::ris_to_user(int cell, int user) {
  return ris_to_user_[static_cast<std::size_t>(cell * users_per_cell_ + user)];
}
const CMatrix& ChannelSet::ris_to_user(int cell, int user) const {
  return ris_to_user_[static_cast<std::size_t>(cell * users_per_cell_ + user)];
}

void ChannelSet::validate() const {
  auto check = [](const CMatrix& m, Eigen::Index r, Eigen::Index c,
                  const char* what) {
    require_dims(m, r, c, what);
    if (!m.allFinite()) {
      throw NumericalError(std::string(what) + ": non-finite entry");
    }
  };
  for (const auto& h : direct_) check(h, rx_antennas_, tx_antennas_, "direct");
  for (const auto& t : bs_to_ris_) {
    check(t, ris_elements_, tx_antennas_, "bs_to_ris");
  }
  for (const auto& r : ris_to_user_) {
    check(r, rx_antennas_, ris_elements_, "ris_to_user");
  }
}

ChannelSet ChannelSet::without_ris() const {
  ChannelSet out = *this;
  for (auto& t : out.bs_to_ris_) t.setZero();
  for (auto& r : out.ris_to_user_) r.setZero();
  return out;
}

ChannelSet ChannelSet::single_cell(int cell) const {
  ChannelSet out(1, users_per_cell_, tx_antennas_, rx_antennas_,
                 ris_elements_);
  out.bs_to_ris(0) = bs_to_ris(cell);
  for (int k = 0; k < users_per_cell_; ++k) {
    out.direct(0, 0, k) = direct(cell, cell, k);
    out.ris_to_user(0, k) = ris_to_user(cell, k);
    out.user_positions[static_cast<std::size_t>(k)] =
        user_positions[static_cast<std::size_t>(cell * users_per_cell_ + k)];
  }
  return out;
}

double path_loss_db(double distance, double exponent, double ref_db) {
  if (!std::isfinite(distance)) {
    throw GeometryError("path_loss_db: non-finite distance");
  }
  if (distance < 0.0) throw GeometryError("path_loss_db: negative distance");
  const double d = std::max(distance, 1.0);
  if (!(exponent > 0.0)) {
    throw GeometryError("path_loss_db: exponent must be positive");
  }
  return ref_db + 10.0 * exponent * std::log10(d);
}

CMatrix gen_rayleigh(int rows, int cols, double pathloss_db, Rng& rng) {
  if (rows < 1 || cols < 1) {
    throw DimensionError("gen_rayleigh: dimensions must be positive");
  }
  const double power = std::pow(10.0, -pathloss_db / 10.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double s = std::sqrt(power / 2.0);
  CMatrix h(rows, cols);
  for (Eigen::Index j = 0; j < h.cols(); ++j) {
    for (Eigen::Index i = 0; i < h.rows(); ++i) {
      const double re = normal(rng);
      const double im = normal(rng);
      h(i, j) = Complex(s * re, s * im);
    }
  }
  return h;
}

CMatrix gen_rician(int rows, int cols, double pathloss_db, double rician_k,
                   const CMatrix& los, Rng& rng) {
  if (!(rician_k >= 0.0)) {
    throw DimensionError("gen_rician: rician factor must be nonnegative");
  }
  require_dims(los, rows, cols, "gen_rician LOS matrix");
  const double scale = std::pow(10.0, -pathloss_db / 20.0);
  const CMatrix nlos = gen_rayleigh(rows, cols, 0.0, rng);
  const double w_los = std::sqrt(rician_k / (1.0 + rician_k));
  const double w_nlos = std::sqrt(1.0 / (1.0 + rician_k));
  return scale * (w_los * los + w_nlos * nlos);
}

namespace {

// Half-wavelength ULA along the y-axis: element n has phase -pi * n * sin(theta)
// where sin(theta) is the direction cosine along the array axis.
CVector ula_response(int n, double direction_cosine) {
  CVector a(n);
  for (int i = 0; i < n; ++i) {
    a(i) = std::polar(1.0, -std::numbers::pi * i * direction_cosine);
  }
  return a;
}

}  // namespace

CMatrix los_steering(const Point& tx, const Point& rx, int rows, int cols) {
  if (rows < 1 || cols < 1) {
    throw DimensionError("los_steering: dimensions must be positive");
  }
  const Point d = rx - tx;
  const double dist = d.norm();
  if (!(dist > 0.0)) {
    throw GeometryError("los_steering: coincident transmitter and receiver");
  }
  const double departure = d.y() / dist;
  const double arrival = -d.y() / dist;
  const CVector a_rx = ula_response(rows, arrival);
  const CVector a_tx = ula_response(cols, departure);
  return a_rx * a_tx.adjoint();
}

ChannelSet draw_scenario(const ScenarioConfig& config, Rng& rng) {
  config.validate();
  const int L = config.num_cells;
  const int K = config.users_per_cell;
  const int nt = config.tx_antennas;
  const int nr = config.rx_antennas;
  ChannelSet ch(L, K, nt, nr, config.ris_elements());

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int l = 0; l < L; ++l) {
    for (int k = 0; k < K; ++k) {
      const double r = config.user_disk_radius * std::sqrt(unit(rng));
      const double theta = 2.0 * std::numbers::pi * unit(rng);
      ch.user_positions[static_cast<std::size_t>(config.user_index(l, k))] =
          config.user_disk_centers[static_cast<std::size_t>(l)] +
          Point(r * std::cos(theta), r * std::sin(theta));
    }
  }

  for (int b = 0; b < L; ++b) {
    const Point& bs = config.bs_positions[static_cast<std::size_t>(b)];
    for (int l = 0; l < L; ++l) {
      for (int k = 0; k < K; ++k) {
        const Point& ue =
            ch.user_positions[static_cast<std::size_t>(config.user_index(l, k))];
        const double pl = path_loss_db((ue - bs).norm(),
                                       config.pathloss_exp_direct,
                                       config.pathloss_ref_db);
        ch.direct(b, l, k) = gen_rayleigh(nr, nt, pl, rng);
      }
    }
  }

  for (int b = 0; b < L; ++b) {
    const Point& bs = config.bs_positions[static_cast<std::size_t>(b)];
    int row = 0;
    for (const auto& s : config.surfaces) {
      const double pl = path_loss_db((s.position - bs).norm(),
                                     config.pathloss_exp_ris,
                                     config.pathloss_ref_db);
      const CMatrix los = los_steering(bs, s.position, s.elements, nt);
      ch.bs_to_ris(b).middleRows(row, s.elements) =
          gen_rician(s.elements, nt, pl, config.rician_factor, los, rng);
      row += s.elements;
    }
  }

  for (int l = 0; l < L; ++l) {
    for (int k = 0; k < K; ++k) {
      const Point& ue =
          ch.user_positions[static_cast<std::size_t>(config.user_index(l, k))];
      int col = 0;
      for (const auto& s : config.surfaces) {
        const double pl = path_loss_db((ue - s.position).norm(),
                                       config.pathloss_exp_ris,
                                       config.pathloss_ref_db);
        const CMatrix los = los_steering(s.position, ue, nr, s.elements);
        ch.ris_to_user(l, k).middleCols(col, s.elements) =
            gen_rician(nr, s.elements, pl, config.rician_factor, los, rng);
        col += s.elements;
      }
    }
  }
  return ch;
}

CMatrix effective_channel(const CMatrix& direct, const CMatrix& ris_to_user,
                          const CMatrix& phi, const CMatrix& bs_to_ris,
                          bool check_unitary) {
  const Eigen::Index m = phi.rows();
  require_dims(phi, m, m, "effective_channel: reflection");
  if (check_unitary && unitarity_residual(phi) > kUnitaryTolerance) {
    throw NumericalError("effective_channel: reflection is not unitary");
  }
  require_dims(ris_to_user, direct.rows(), m, "effective_channel: ris_to_user");
  require_dims(bs_to_ris, m, direct.cols(), "effective_channel: bs_to_ris");
  return direct + ris_to_user * phi * bs_to_ris;
}

}  // namespace bdris
