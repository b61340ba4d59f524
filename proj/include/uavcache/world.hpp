// Copyright 2026 The uavcache Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "uavcache/config.hpp"
#include "uavcache/errors.hpp"

namespace uavcache {

using Rng = std::mt19937_64;

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

inline double distance(const Point3& a, const Point3& b) {
  return std::hypot(a.x - b.x, a.y - b.y, a.z - b.z);
}

namespace world {

// Rasterized target area. Cell ids run row-major from the origin corner:
// id = iy * nx + ix, centered at ((ix + 1/2) s, (iy + 1/2) s).
struct GridMap {
  int nx = 0;
  int ny = 0;
  double cell_side = 0.0;
  double extent_x = 0.0;
  double extent_y = 0.0;
  std::vector<Point2> cell_centers;

  int cell_count() const { return nx * ny; }
  double cell_area() const { return cell_side * cell_side; }
};

enum class NodeKind { kSensingUav, kCoopUav, kGroundVehicle };

struct NodeState {
  int id = 0;
  NodeKind kind = NodeKind::kCoopUav;
  Point3 position;
  // sensing footprint; meaningful for SUs only
  double apothem = 0.0;
  int polygon_sides = 4;
  // random-waypoint mobility
  Point2 waypoint;
  double speed = 0.0;
};

// One map segment captured by an SU in a slot.
struct MapFile {
  int owner_su = 0;
  double size_bits = 0.0;
  std::vector<int> coverage;
  int slot = 0;
};

inline GridMap build_grid(double extent_x, double extent_y, double cell_side) {
  if (!(cell_side > 0) || !(extent_x > 0) || !(extent_y > 0))
    throw ConfigError("grid: extent and cell_side must be positive");
  const double fx = extent_x / cell_side;
  const double fy = extent_y / cell_side;
  const auto divisible = [](double f) { return std::abs(f - std::round(f)) <= 1e-9 * std::max(1.0, f); };
  if (!divisible(fx) || !divisible(fy)) {
    throw ConfigError("grid: target extent " + std::to_string(extent_x) + " x " + std::to_string(extent_y) +
                      " m is not divisible by cell_side " + std::to_string(cell_side) + " m");
  }
  GridMap g;
  g.nx = static_cast<int>(std::lround(fx));
  g.ny = static_cast<int>(std::lround(fy));
  g.cell_side = cell_side;
  g.extent_x = extent_x;
  g.extent_y = extent_y;
  g.cell_centers.reserve(static_cast<std::size_t>(g.nx) * g.ny);
  for (int iy = 0; iy < g.ny; ++iy)
    for (int ix = 0; ix < g.nx; ++ix)
      g.cell_centers.push_back({(ix + 0.5) * cell_side, (iy + 0.5) * cell_side});
  return g;
}

inline GridMap build_grid(const ScenarioConfig& c) { return build_grid(c.area_x_m, c.area_y_m, c.cell_side_m); }

// True if `p` lies in the regular polygon with the given apothem and side
// count centered at `center`, with the first side's outward normal along +x.
// Points on an edge are inside.
inline bool in_regular_polygon(Point2 p, Point2 center, double apothem, int sides) {
  const double dx = p.x - center.x;
  const double dy = p.y - center.y;
  const double slack = 1e-9 * std::max(1.0, apothem);
  for (int j = 0; j < sides; ++j) {
    const double theta = 2.0 * std::numbers::pi * j / sides;
    if (dx * std::cos(theta) + dy * std::sin(theta) > apothem + slack) return false;
  }
  return true;
}

// Ids (ascending) of the cells whose centers lie inside the SU's polygon.
inline std::vector<int> sensing_footprint(const NodeState& su, const GridMap& grid) {
  std::vector<int> cells;
  if (!(su.apothem > 0) || su.polygon_sides < 3) return cells;
  const Point2 center{su.position.x, su.position.y};
  const double circumradius = su.apothem / std::cos(std::numbers::pi / su.polygon_sides);
  const double s = grid.cell_side;
  const int ix0 = std::max(0, static_cast<int>(std::floor((center.x - circumradius) / s - 0.5)));
  const int ix1 = std::min(grid.nx - 1, static_cast<int>(std::ceil((center.x + circumradius) / s - 0.5)));
  const int iy0 = std::max(0, static_cast<int>(std::floor((center.y - circumradius) / s - 0.5)));
  const int iy1 = std::min(grid.ny - 1, static_cast<int>(std::ceil((center.y + circumradius) / s - 0.5)));
  for (int iy = iy0; iy <= iy1; ++iy)
    for (int ix = ix0; ix <= ix1; ++ix) {
      const int id = iy * grid.nx + ix;
      if (in_regular_polygon(grid.cell_centers[id], center, su.apothem, su.polygon_sides)) cells.push_back(id);
    }
  return cells;
}

// Axis-aligned bounds UAVs are confined to.
struct Area {
  double extent_x = 0.0;
  double extent_y = 0.0;
};

inline Point2 random_point(const Area& area, Rng& rng) {
  std::uniform_real_distribution<double> ux(0.0, area.extent_x);
  std::uniform_real_distribution<double> uy(0.0, area.extent_y);
  const double x = ux(rng);
  const double y = uy(rng);
  return {x, y};
}

// Random-waypoint step. Each UAV moves toward its waypoint by speed*dt; if the
// waypoint is within reach it lands on it and draws a fresh one. The GV does
// not move.
inline void step_mobility(std::span<NodeState> nodes, const Area& area, Rng& rng, double dt) {
  if (!(dt > 0)) throw DomainError("step_mobility: dt must be positive");
  for (auto& n : nodes) {
    if (n.kind == NodeKind::kGroundVehicle) continue;
    const double reach = n.speed * dt;
    const double dx = n.waypoint.x - n.position.x;
    const double dy = n.waypoint.y - n.position.y;
    const double dist = std::hypot(dx, dy);
    if (dist <= reach) {
      n.position.x = n.waypoint.x;
      n.position.y = n.waypoint.y;
      n.waypoint = random_point(area, rng);
    } else {
      n.position.x += dx / dist * reach;
      n.position.y += dy / dist * reach;
    }
    n.position.x = std::clamp(n.position.x, 0.0, area.extent_x);
    n.position.y = std::clamp(n.position.y, 0.0, area.extent_y);
  }
}

// Z_i = u * |L_i| with u ~ U[lo, hi] bits per cell. Always consumes one draw
// so the random stream does not depend on footprint sizes.
inline double sample_file_size(double lo_bits, double hi_bits, Rng& rng, std::size_t covered_cells) {
  if (!(lo_bits <= hi_bits)) throw ConfigError("content size range: lo must not exceed hi");
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double per_cell = lo_bits + (hi_bits - lo_bits) * u(rng);
  return per_cell * static_cast<double>(covered_cells);
}

// Snapshot of every node and the current files. SU i is nodes[i], CU e is
// nodes[I + e], and the GV is the last node.
class World {
 public:
  World() = default;

  // Fresh placement of all nodes plus the first slot's files.
  static World generate(const ScenarioConfig& c, Rng& rng) {
    World w;
    w.grid_ = build_grid(c);
    w.area_ = {c.area_x_m, c.area_y_m};
    w.sensing_ = c.sensing_uavs;
    w.coop_ = c.coop_uavs;
    w.content_lo_bits_ = c.content_kbits_min * 1e3;
    w.content_hi_bits_ = c.content_kbits_max * 1e3;
    int id = 0;
    for (int i = 0; i < c.sensing_uavs + c.coop_uavs; ++i) {
      NodeState n;
      n.id = id++;
      n.kind = i < c.sensing_uavs ? NodeKind::kSensingUav : NodeKind::kCoopUav;
      const Point2 p = random_point(w.area_, rng);
      n.position = {p.x, p.y, c.altitude_m};
      n.waypoint = random_point(w.area_, rng);
      n.speed = c.speed_mps;
      if (n.kind == NodeKind::kSensingUav) {
        n.apothem = c.apothem_m;
        n.polygon_sides = c.polygon_sides;
      }
      w.nodes_.push_back(n);
    }
    NodeState gv;
    gv.id = id;
    gv.kind = NodeKind::kGroundVehicle;
    gv.position = {c.area_x_m / 2.0, c.area_y_m / 2.0, 0.0};
    w.nodes_.push_back(gv);
    w.sample_files(rng);
    return w;
  }

  // Moves every UAV by one slot and captures new files.
  void advance(Rng& rng, double dt) {
    step_mobility(nodes_, area_, rng, dt);
    ++slot_;
    sample_files(rng);
  }

  const GridMap& grid() const { return grid_; }
  const Area& area() const { return area_; }
  int slot() const { return slot_; }
  int sensing_count() const { return sensing_; }
  int coop_count() const { return coop_; }
  const NodeState& su(int i) const { return nodes_[i]; }
  const NodeState& cu(int e) const { return nodes_[sensing_ + e]; }
  const NodeState& gv() const { return nodes_.back(); }
  std::span<const NodeState> nodes() const { return nodes_; }
  const std::vector<MapFile>& files() const { return files_; }
  const MapFile& file(int i) const { return files_[i]; }

 private:
  void sample_files(Rng& rng) {
    files_.clear();
    for (int i = 0; i < sensing_; ++i) {
      MapFile f;
      f.owner_su = i;
      f.slot = slot_;
      f.coverage = sensing_footprint(nodes_[i], grid_);
      f.size_bits = sample_file_size(content_lo_bits_, content_hi_bits_, rng, f.coverage.size());
      files_.push_back(std::move(f));
    }
  }

  GridMap grid_;
  Area area_;
  int sensing_ = 0;
  int coop_ = 0;
  double content_lo_bits_ = 0.0;
  double content_hi_bits_ = 0.0;
  int slot_ = 0;
  std::vector<NodeState> nodes_;
  std::vector<MapFile> files_;
};

}  // namespace world
}  // namespace uavcache
