// SPDX-License-Identifier: Apache-2.0
#include "hbf/channel_gen.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

namespace hbf {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Scatterer {
  Eigen::Vector3d location;
  double reflection_loss_db;
};

// Fixed per (seed, area): the "buildings" every user of the area reflects off.
std::vector<Scatterer> area_scatterers(std::uint64_t seed, const ScenarioArea& area) {
  std::vector<Scatterer> out;
  const int count = std::max(area.num_paths - 1, 0);
  if (count == 0) return out;
  Rng rng = Rng::stream(seed, "channel.scatterers", {static_cast<std::uint64_t>(area.area_id)});
  const double x_lo = area.origin_x;
  const double x_hi = area.origin_x + area.spacing_m * (area.grid_nx - 1);
  const double y_lo = area.origin_y;
  const double y_hi = area.origin_y + area.spacing_m * (area.grid_ny - 1);
  for (int i = 0; i < count; ++i) {
    Scatterer s;
    s.location = {rng.uniform(0.5 * x_lo, x_hi + 20.0), rng.uniform(y_lo - 15.0, y_hi + 15.0),
                  rng.uniform(2.0, 15.0)};
    s.reflection_loss_db = rng.uniform(6.0, 14.0);
    out.push_back(s);
  }
  return out;
}

double path_amplitude(const ScenarioArea& area, double distance, double extra_loss_db) {
  double loss_db = area.path_loss_ref_db + 10.0 * area.path_loss_exponent * std::log10(distance) +
                   area.path_loss_offset_db + extra_loss_db;
  return area.tx_amplitude * std::pow(10.0, -loss_db / 20.0);
}

void departure_angles(const Eigen::Vector3d& from, const Eigen::Vector3d& to, double& az,
                      double& el) {
  Eigen::Vector3d d = to - from;
  az = std::atan2(d.y(), d.x());
  el = std::acos(std::clamp(d.z() / d.norm(), -1.0, 1.0));
}

}  // namespace

void ArrayGeometry::validate() const {
  if (nx < 1 || ny < 1 || nz < 1) throw InvalidArgument("array axes need at least one element");
  if (!(spacing > 0.0)) throw InvalidArgument("array spacing must be positive");
}

ArrayGeometry ArrayGeometry::for_antennas(int n_t, double spacing) {
  if (n_t < 1) throw InvalidArgument("array needs at least one antenna");
  int nz = 1;
  for (int d = 1; d * d <= n_t; ++d) {
    if (n_t % d == 0) nz = d;
  }
  return ArrayGeometry{1, n_t / nz, nz, spacing};
}

bool ScenarioArea::contains(const UserPosition& p) const {
  return p.area_id == area_id && p.grid_x >= 0 && p.grid_x < grid_nx && p.grid_y >= 0 &&
         p.grid_y < grid_ny;
}

void ScenarioArea::validate() const {
  if (grid_nx < 1 || grid_ny < 1) throw InvalidArgument("area grid must be non-empty");
  if (!(spacing_m > 0.0)) throw InvalidArgument("area grid spacing must be positive");
  if (num_paths < 1 || num_paths > 10) throw InvalidArgument("num_paths must be in [1, 10]");
  if (!(path_loss_exponent > 0.0)) throw InvalidArgument("path-loss exponent must be positive");
}

Eigen::Vector3d ScenarioArea::location(const UserPosition& p) const {
  return {origin_x + spacing_m * p.grid_x, origin_y + spacing_m * p.grid_y, user_height};
}

UserPosition ScenarioArea::position_at(int index) const {
  return UserPosition{index % grid_nx, index / grid_nx, area_id};
}

int ScenarioArea::index_of(const UserPosition& p) const { return p.grid_y * grid_nx + p.grid_x; }

ScenarioArea ScenarioArea::limited() {
  ScenarioArea a;
  a.name = "limited";
  a.area_id = 0;
  a.grid_nx = 8;
  a.grid_ny = 8;
  a.origin_x = 60.0;
  a.origin_y = -7.0;
  a.path_loss_offset_db = 2.30;
  return a;
}

ScenarioArea ScenarioArea::extended() {
  ScenarioArea a;
  a.name = "extended";
  a.area_id = 1;
  a.grid_nx = 10;
  a.grid_ny = 16;
  a.origin_x = 14.0;
  a.origin_y = -15.0;
  a.path_loss_offset_db = 7.89;
  return a;
}

ScenarioArea ScenarioArea::crossroad() {
  ScenarioArea a;
  a.name = "crossroad";
  a.area_id = 2;
  a.grid_nx = 14;
  a.grid_ny = 14;
  a.origin_x = 18.0;
  a.origin_y = -13.0;
  a.path_loss_offset_db = 4.71;
  return a;
}

ScenarioArea ScenarioArea::by_name(const std::string& name) {
  if (name == "limited") return limited();
  if (name == "extended") return extended();
  if (name == "crossroad") return crossroad();
  throw InvalidArgument("unknown scenario area '" + name + "'");
}

CVector array_response(const ArrayGeometry& geom, double azimuth, double elevation) {
  const double kx = std::sin(elevation) * std::cos(azimuth);
  const double ky = std::sin(elevation) * std::sin(azimuth);
  const double kz = std::cos(elevation);
  CVector a(geom.n_t());
  for (int z = 0; z < geom.nz; ++z) {
    for (int y = 0; y < geom.ny; ++y) {
      for (int x = 0; x < geom.nx; ++x) {
        double phase = kTwoPi * geom.spacing * (x * kx + y * ky + z * kz);
        a(x + geom.nx * (y + geom.ny * z)) = std::polar(1.0, phase);
      }
    }
  }
  return a;
}

std::vector<PathComponent> user_paths(std::uint64_t seed, const ScenarioArea& area,
                                      const UserPosition& pos) {
  if (!area.contains(pos)) {
    throw InvalidArgument("position (" + std::to_string(pos.grid_x) + ", " +
                          std::to_string(pos.grid_y) + ") is outside area " + area.name);
  }
  const Eigen::Vector3d bs{area.bs_x, area.bs_y, area.bs_z};
  const Eigen::Vector3d user = area.location(pos);
  Rng rng = Rng::stream(seed, "channel.paths",
                        {static_cast<std::uint64_t>(area.area_id),
                         static_cast<std::uint64_t>(pos.grid_x),
                         static_cast<std::uint64_t>(pos.grid_y)});

  std::vector<PathComponent> paths;
  PathComponent los;
  departure_angles(bs, user, los.azimuth, los.elevation);
  los.phase = rng.uniform(0.0, kTwoPi);
  los.gain = path_amplitude(area, (user - bs).norm(), 0.0);
  paths.push_back(los);

  for (const auto& s : area_scatterers(seed, area)) {
    PathComponent p;
    departure_angles(bs, s.location, p.azimuth, p.elevation);
    double length = (s.location - bs).norm() + (user - s.location).norm();
    p.phase = rng.uniform(0.0, kTwoPi);
    p.gain = path_amplitude(area, length, s.reflection_loss_db);
    paths.push_back(p);
  }
  return paths;
}

CVector channel_column(const ArrayGeometry& geom, const std::vector<PathComponent>& paths) {
  CVector h = CVector::Zero(geom.n_t());
  for (const auto& p : paths) {
    h += p.gain * std::polar(1.0, p.phase) * array_response(geom, p.azimuth, p.elevation);
  }
  return h;
}

ChannelRealization generate_channel(const SystemConfig& cfg, const ScenarioArea& area,
                                    const ArrayGeometry& geom,
                                    const std::vector<UserPosition>& positions) {
  if (static_cast<int>(positions.size()) != cfg.n_u) {
    throw InvalidArgument("generate_channel needs exactly n_u positions");
  }
  if (geom.n_t() != cfg.n_t) throw ShapeError("array geometry does not match n_t");
  ChannelRealization out;
  out.h.resize(cfg.n_t, cfg.n_u);
  out.positions = positions;
  for (int u = 0; u < cfg.n_u; ++u) {
    out.h.col(u) = channel_column(geom, user_paths(cfg.seed, area, positions[static_cast<std::size_t>(u)]));
  }
  return out;
}

std::vector<UserPosition> sample_user_set(const ScenarioArea& area, int n_u, Rng& rng) {
  if (n_u < 0 || n_u > area.p_u()) {
    throw InvalidArgument("insufficient positions: area " + area.name + " has " +
                          std::to_string(area.p_u()) + " < " + std::to_string(n_u));
  }
  std::vector<int> idx(static_cast<std::size_t>(area.p_u()));
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<UserPosition> out;
  for (int i = 0; i < n_u; ++i) {
    auto j = static_cast<std::size_t>(rng.uniform_int(i, area.p_u() - 1));
    std::swap(idx[static_cast<std::size_t>(i)], idx[j]);
    out.push_back(area.position_at(idx[static_cast<std::size_t>(i)]));
  }
  return out;
}

double mean_snr_db(const SystemConfig& cfg, const ScenarioArea& area, const ArrayGeometry& geom) {
  double acc = 0.0;
  for (int i = 0; i < area.p_u(); ++i) {
    CVector h = channel_column(geom, user_paths(cfg.seed, area, area.position_at(i)));
    acc += h.squaredNorm() / geom.n_t();
  }
  return 10.0 * std::log10(acc / area.p_u() / cfg.sigma2());
}

}  // namespace hbf
