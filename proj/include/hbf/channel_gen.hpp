// SPDX-License-Identifier: Apache-2.0
//
// Seeded geometric multipath channel generator over a positioned user grid.
// Every channel column is a pure function of (seed, area, grid position), so
// the position -> channel map is fixed for a given world.
#pragma once

#include <string>
#include <vector>

#include "hbf/model_core.hpp"
#include "hbf/rng.hpp"

namespace hbf {

struct ArrayGeometry {
  int nx = 1;
  int ny = 4;
  int nz = 4;
  double spacing = 0.5;  // wavelengths

  int n_t() const { return nx * ny * nz; }
  void validate() const;
  /// Planar array in the y-z plane (nx = 1), as square as n_t allows with ny >= nz.
  static ArrayGeometry for_antennas(int n_t, double spacing = 0.5);
};

struct UserPosition {
  int grid_x = 0;
  int grid_y = 0;
  int area_id = 0;

  friend bool operator==(const UserPosition&, const UserPosition&) = default;
};

struct ScenarioArea {
  std::string name;
  int area_id = 0;
  int grid_nx = 10;
  int grid_ny = 10;
  double origin_x = 20.0;  // metres, first grid point
  double origin_y = -10.0;
  double spacing_m = 2.0;
  double user_height = 1.5;
  double bs_x = 0.0;
  double bs_y = 0.0;
  double bs_z = 6.0;
  int num_paths = 10;
  double path_loss_exponent = 3.0;
  double path_loss_ref_db = 61.4;  // loss at 1 m
  double path_loss_offset_db = 0.0;
  double tx_amplitude = 1.0;  // uniform transmit normalization

  int p_u() const { return grid_nx * grid_ny; }
  bool contains(const UserPosition& p) const;
  /// Throws InvalidArgument when a field is out of range.
  void validate() const;
  /// Cartesian coordinates (x, y, z) of a grid point.
  Eigen::Vector3d location(const UserPosition& p) const;
  UserPosition position_at(int index) const;
  int index_of(const UserPosition& p) const;

  static ScenarioArea limited();
  static ScenarioArea extended();
  static ScenarioArea crossroad();
  /// One of "limited", "extended", "crossroad".
  static ScenarioArea by_name(const std::string& name);
};

struct PathComponent {
  Complex gain;
  double azimuth = 0.0;    // rad, in the x-y plane from +x
  double elevation = 0.0;  // rad, from +z
  double phase = 0.0;      // rad
};

struct ChannelRealization {
  CMatrix h;  // N_T x N_U
  std::vector<UserPosition> positions;
};

/// Steering vector; element (x, y, z) has phase
/// 2 pi spacing (x sin(el) cos(az) + y sin(el) sin(az) + z cos(el)).
/// Element index is x + nx (y + ny z).
CVector array_response(const ArrayGeometry& geom, double azimuth, double elevation);

/// The (at most num_paths) propagation paths of one grid position:
/// a line-of-sight path toward the BS plus paths via fixed area scatterers.
std::vector<PathComponent> user_paths(std::uint64_t seed, const ScenarioArea& area,
                                      const UserPosition& pos);

CVector channel_column(const ArrayGeometry& geom, const std::vector<PathComponent>& paths);

ChannelRealization generate_channel(const SystemConfig& cfg, const ScenarioArea& area,
                                    const ArrayGeometry& geom,
                                    const std::vector<UserPosition>& positions);

/// n_u distinct positions drawn uniformly without replacement.
std::vector<UserPosition> sample_user_set(const ScenarioArea& area, int n_u, Rng& rng);

/// 10 log10 of the mean per-antenna SNR ||h_u||^2 / (N_T sigma2) over all positions.
double mean_snr_db(const SystemConfig& cfg, const ScenarioArea& area, const ArrayGeometry& geom);

}  // namespace hbf
