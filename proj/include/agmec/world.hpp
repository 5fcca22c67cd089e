#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "agmec/config.hpp"
#include "agmec/error.hpp"
#include "agmec/rng.hpp"

namespace agmec {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

inline double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

/// A grid cell. Cells are numbered row-major from the south-west corner.
struct Location {
  int cell = 0;
  friend bool operator==(Location, Location) = default;
};

class Grid {
 public:
  Grid(int cols, int rows, double cell_size) : cols_(cols), rows_(rows), cell_size_(cell_size)
  {
    if (cols < 1 || rows < 1 || !(cell_size > 0)) throw ConfigError("grid: bad dimensions");
  }

  int cols() const { return cols_; }
  int rows() const { return rows_; }
  int size() const { return cols_ * rows_; }
  double cell_size() const { return cell_size_; }
  bool contains(Location l) const { return l.cell >= 0 && l.cell < size(); }
  int col(Location l) const { return l.cell % cols_; }
  int row(Location l) const { return l.cell / cols_; }
  Location at(int col, int row) const { return Location{row * cols_ + col}; }

  Point center(Location l) const
  {
    check(l);
    return {(col(l) + 0.5) * cell_size_, (row(l) + 0.5) * cell_size_};
  }

  /// Inverse of center(); exact for any point returned by center().
  Location locate(Point p) const
  {
    const int c = std::clamp(static_cast<int>(std::floor(p.x / cell_size_)), 0, cols_ - 1);
    const int r = std::clamp(static_cast<int>(std::floor(p.y / cell_size_)), 0, rows_ - 1);
    return at(c, r);
  }

  /// The cell itself first, then in-grid cells at Chebyshev distance 1.
  std::vector<Location> neighborhood(Location l) const
  {
    check(l);
    std::vector<Location> out{l};
    for (int dr = -1; dr <= 1; ++dr)
      for (int dc = -1; dc <= 1; ++dc) {
        if (dr == 0 && dc == 0) continue;
        const int c = col(l) + dc, r = row(l) + dr;
        if (c >= 0 && c < cols_ && r >= 0 && r < rows_) out.push_back(at(c, r));
      }
    return out;
  }

  void check(Location l) const
  {
    if (!contains(l)) throw ConfigError("invalid cell index " + std::to_string(l.cell));
  }

 private:
  int cols_;
  int rows_;
  double cell_size_;
};

/// BS positions, the neighbour graph ⟨B, E⟩ and the coverage partition of L
/// (every cell is served by its nearest BS, lowest index on ties).
class Topology {
 public:
  Topology(const Grid& grid, std::vector<Point> bs, std::vector<std::pair<int, int>> edges)
      : bs_(std::move(bs)), adjacency_(bs_.size(), 0u)
  {
    if (bs_.empty() || bs_.size() > 16) throw ConfigError("topology: need 1..16 BSs");
    for (auto [a, b] : edges) {
      if (a < 0 || b < 0 || a >= count() || b >= count() || a == b)
        throw ConfigError("topology: bad edge " + std::to_string(a) + "-" + std::to_string(b));
      adjacency_[a] |= 1u << b;
      adjacency_[b] |= 1u << a;
    }
    serving_.resize(grid.size());
    for (int cell = 0; cell < grid.size(); ++cell) {
      const Point p = grid.center(Location{cell});
      int best = 0;
      for (int b = 1; b < count(); ++b)
        if (distance(p, bs_[b]) < distance(p, bs_[best])) best = b;
      serving_[cell] = best;
    }
  }

  /// Topology from scratch without a grid (auction tests). Coverage is empty.
  static Topology graph_only(int bs_count, const std::vector<std::pair<int, int>>& edges)
  {
    Topology t;
    t.bs_.assign(bs_count, Point{});
    t.adjacency_.assign(bs_count, 0u);
    for (auto [a, b] : edges) {
      t.adjacency_[a] |= 1u << b;
      t.adjacency_[b] |= 1u << a;
    }
    return t;
  }

  int count() const { return static_cast<int>(bs_.size()); }
  int uav_index() const { return count(); }  // association value of the UAV (B+1 in 1-based terms)
  Point position(int b) const { return bs_.at(b); }
  bool adjacent(int a, int b) const { return (adjacency_.at(a) >> b) & 1u; }
  std::uint32_t neighbours(int b) const { return adjacency_.at(b); }
  int serving_bs(Location l) const { return serving_.at(l.cell); }

 private:
  Topology() = default;
  std::vector<Point> bs_;
  std::vector<std::uint32_t> adjacency_;
  std::vector<int> serving_;
};

inline std::vector<Point> parse_points(std::string_view s)
{
  std::vector<Point> out;
  while (!s.empty()) {
    const auto semi = s.find(';');
    auto item = detail::trim(s.substr(0, semi));
    const auto colon = item.find(':');
    Point p;
    if (colon == std::string_view::npos || !detail::parse_value(item.substr(0, colon), p.x) ||
        !detail::parse_value(item.substr(colon + 1), p.y))
      throw ConfigError("bs_positions: expected x:y items, got '" + std::string(item) + "'");
    out.push_back(p);
    if (semi == std::string_view::npos) break;
    s.remove_prefix(semi + 1);
  }
  return out;
}

inline std::vector<std::pair<int, int>> parse_edges(std::string_view s)
{
  std::vector<std::pair<int, int>> out;
  while (!s.empty()) {
    const auto semi = s.find(';');
    auto item = detail::trim(s.substr(0, semi));
    const auto dash = item.find('-');
    int a = 0, b = 0;
    if (dash == std::string_view::npos || !detail::parse_value(item.substr(0, dash), a) ||
        !detail::parse_value(item.substr(dash + 1), b))
      throw ConfigError("bs_edges: expected a-b items, got '" + std::string(item) + "'");
    out.emplace_back(a, b);
    if (semi == std::string_view::npos) break;
    s.remove_prefix(semi + 1);
  }
  return out;
}

/// Builds the BS layout from the config. Without explicit positions the BS
/// count must be a perfect square; BSs sit at the centers of equal blocks of
/// the region (quadrant centers for B = 4) with rook adjacency.
inline Topology make_topology(const WorldConfig& w, const Grid& grid)
{
  std::vector<Point> pos;
  std::vector<std::pair<int, int>> edges;
  const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(w.bs_count))));
  const bool lattice = side * side == w.bs_count;
  if (w.bs_positions.empty()) {
    if (!lattice) throw ConfigError("bs_positions required when bs_count is not a square");
    const double wx = grid.cols() * grid.cell_size() / side;
    const double wy = grid.rows() * grid.cell_size() / side;
    for (int r = 0; r < side; ++r)
      for (int c = 0; c < side; ++c) pos.push_back({(c + 0.5) * wx, (r + 0.5) * wy});
  } else {
    pos = parse_points(w.bs_positions);
  }
  if (static_cast<int>(pos.size()) != w.bs_count)
    throw ConfigError("bs_positions lists " + std::to_string(pos.size()) + " BSs, bs_count is " +
                      std::to_string(w.bs_count));
  if (w.bs_edges.empty()) {
    if (!lattice) throw ConfigError("bs_edges required when bs_count is not a square");
    for (int r = 0; r < side; ++r)
      for (int c = 0; c < side; ++c) {
        const int b = r * side + c;
        if (c + 1 < side) edges.emplace_back(b, b + 1);
        if (r + 1 < side) edges.emplace_back(b, b + side);
      }
  } else {
    edges = parse_edges(w.bs_edges);
  }
  return Topology(grid, std::move(pos), std::move(edges));
}

/// Sparse Markov chain over cells: each row is a distribution over the cell
/// and its one-cell neighbourhood.
class MobilityModel {
 public:
  struct Entry {
    Location to;
    double prob;
  };
  using Row = std::vector<Entry>;

  MobilityModel(const Grid& grid, std::vector<Row> rows) : rows_(std::move(rows))
  {
    if (static_cast<int>(rows_.size()) != grid.size())
      throw ConfigError("mobility: need one row per cell");
    for (int cell = 0; cell < grid.size(); ++cell) {
      const Location from{cell};
      double sum = 0.0;
      for (const auto& e : rows_[cell]) {
        grid.check(e.to);
        if (!(e.prob >= 0.0)) throw ConfigError("mobility: negative probability");
        if (std::abs(grid.col(e.to) - grid.col(from)) > 1 ||
            std::abs(grid.row(e.to) - grid.row(from)) > 1)
          throw ConfigError("mobility: transition beyond one cell");
        sum += e.prob;
      }
      if (rows_[cell].empty() || std::abs(sum - 1.0) > 1e-12)
        throw ConfigError("mobility: row " + std::to_string(cell) + " does not sum to 1");
    }
  }

  /// Random walk with per-row weights drawn from `rng`: stay plus every
  /// in-grid neighbour, each weight uniform in [0.05, 1.05) before normalizing.
  static MobilityModel random_walk(const Grid& grid, Rng& rng)
  {
    std::vector<Row> rows(grid.size());
    for (int cell = 0; cell < grid.size(); ++cell) {
      const auto hood = grid.neighborhood(Location{cell});
      std::vector<double> w(hood.size());
      double total = 0.0;
      for (auto& x : w) total += (x = 0.05 + uniform01(rng));
      double acc = 0.0;
      for (std::size_t i = 0; i < hood.size(); ++i) {
        const double p = i + 1 < hood.size() ? w[i] / total : 1.0 - acc;
        acc += p;
        rows[cell].push_back({hood[i], p});
      }
    }
    return MobilityModel(grid, std::move(rows));
  }

  /// Absorbing chain (every row is {stay: 1}).
  static MobilityModel stationary(const Grid& grid)
  {
    std::vector<Row> rows(grid.size());
    for (int cell = 0; cell < grid.size(); ++cell) rows[cell] = {{Location{cell}, 1.0}};
    return MobilityModel(grid, std::move(rows));
  }

  const Row& row(Location l) const
  {
    if (l.cell < 0 || l.cell >= static_cast<int>(rows_.size()))
      throw ConfigError("invalid cell index " + std::to_string(l.cell));
    return rows_[l.cell];
  }

  /// Inverse-CDF sample of the row of `current` for a given uniform draw.
  Location sample(Location current, double u) const
  {
    const auto& r = row(current);
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < r.size(); ++i) {
      acc += r[i].prob;
      if (u < acc) return r[i].to;
    }
    return r.back().to;
  }

 private:
  std::vector<Row> rows_;
};

inline Location step_mobility(const MobilityModel& model, Location current, Rng& rng)
{
  return model.sample(current, uniform01(rng));
}

/// Ground link: g0 · max(d, 1 m)^(−α), d horizontal distance to the BS.
inline double ground_gain(const WorldConfig& w, Point mu, Point bs)
{
  return w.ground_gain_ref * std::pow(std::max(distance(mu, bs), 1.0), -w.ground_exponent);
}

/// UAV line-of-sight link: g0v · (H² + d²)^(−αv/2).
inline double uav_gain(const WorldConfig& w, Point mu, Point uav_ground)
{
  const double d = distance(mu, uav_ground);
  return w.uav_gain_ref * std::pow(w.uav_altitude * w.uav_altitude + d * d, -w.uav_exponent / 2.0);
}

/// Pre-processing buffer: arrival epoch index of the waiting task, 0 when empty.
struct TaskBuffer {
  std::int64_t arrival = 0;
  bool empty() const { return arrival == 0; }
  friend bool operator==(TaskBuffer, TaskBuffer) = default;
};

/// Bernoulli(λ) arrival at the beginning of epoch j; a new task replaces any
/// older one.
inline TaskBuffer sample_arrival_and_admit(TaskBuffer buffer, std::int64_t epoch, Rng& rng,
                                           double lambda)
{
  if (epoch < 1) throw ConfigError("epoch index must be >= 1");
  if (uniform01(rng) < lambda) buffer.arrival = epoch;
  return buffer;
}

/// Geometry, topology, mobility models and the current UAV/MU locations.
class World {
 public:
  explicit World(const WorldConfig& cfg)
      : cfg_(cfg),
        grid_(cfg.grid_cols, cfg.grid_rows, cfg.cell_size),
        topology_(make_topology(cfg, grid_)),
        uav_model_(MobilityModel::stationary(grid_))
  {
    Rng gen = make_stream(cfg.seed, kGeneratorStream);
    uav_model_ = MobilityModel::random_walk(grid_, gen);
    for (int k = 0; k < cfg.num_users; ++k)
      user_models_.push_back(MobilityModel::random_walk(grid_, gen));
    uav_ = Location{static_cast<int>(uniform_index(gen, grid_.size()))};
    for (int k = 0; k < cfg.num_users; ++k)
      users_.push_back(Location{static_cast<int>(uniform_index(gen, grid_.size()))});
    uav_rng_ = make_stream(cfg.seed, kUavStream);
    for (int k = 0; k < cfg.num_users; ++k) user_rngs_.push_back(make_stream(cfg.seed, kUserStream + k));
  }

  const WorldConfig& config() const { return cfg_; }
  const Grid& grid() const { return grid_; }
  const Topology& topology() const { return topology_; }
  const MobilityModel& uav_model() const { return uav_model_; }
  const MobilityModel& user_model(int k) const { return user_models_.at(k); }
  int num_users() const { return static_cast<int>(users_.size()); }

  Location uav() const { return uav_; }
  Location user(int k) const { return users_.at(k); }
  void place_uav(Location l) { grid_.check(l); uav_ = l; }
  void place_user(int k, Location l) { grid_.check(l); users_.at(k) = l; }
  void set_uav_model(MobilityModel m) { uav_model_ = std::move(m); }
  void set_user_model(int k, MobilityModel m) { user_models_.at(k) = std::move(m); }

  int serving_bs(int k) const { return topology_.serving_bs(users_.at(k)); }

  double gain_to_bs(int k, int b) const
  {
    return ground_gain(cfg_, grid_.center(users_.at(k)), topology_.position(b));
  }
  double gain_to_uav(int k) const
  {
    return uav_gain(cfg_, grid_.center(users_.at(k)), grid_.center(uav_));
  }

  /// One mobility step for the UAV and every MU (fixed order).
  void step()
  {
    uav_ = step_mobility(uav_model_, uav_, uav_rng_);
    for (int k = 0; k < num_users(); ++k)
      users_[k] = step_mobility(user_models_[k], users_[k], user_rngs_[k]);
  }

  static constexpr std::uint64_t kGeneratorStream = 1;
  static constexpr std::uint64_t kUavStream = 2;
  static constexpr std::uint64_t kUserStream = 1000;

 private:
  WorldConfig cfg_;
  Grid grid_;
  Topology topology_;
  MobilityModel uav_model_;
  std::vector<MobilityModel> user_models_;
  Location uav_;
  std::vector<Location> users_;
  Rng uav_rng_;
  std::vector<Rng> user_rngs_;
};

}  // namespace agmec
