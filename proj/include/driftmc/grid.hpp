#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

namespace driftmc {

/// Zero-based chain state. Files use the same zero-based numbering.
using State = std::int32_t;
inline constexpr State kOutside = -1;

/// Column/row of a box in the full rectangle, zero-based from the lower-left corner.
struct BoxIndex {
  int lon = 0;
  int lat = 0;
  friend bool operator==(const BoxIndex&, const BoxIndex&) = default;
};

struct GridBounds {
  double lon_min = 0, lon_max = 0;
  double lat_min = 0, lat_max = 0;
};

/// Row-major by latitude row: wet[lat * n_lon + lon]. Empty means all wet.
using WetMask = std::vector<bool>;

/// Longitude-latitude box covering with half-open cells
/// [lon_i, lon_i + d) x [lat_j, lat_j + d). Active (wet) boxes are numbered
/// 0..N-1 in increasing box id (lat * n_lon + lon).
class GridCovering {
 public:
  GridCovering(GridBounds bounds, double cell_size, const WetMask& wet);

  std::size_t size() const { return active_.size(); }
  int n_lon() const { return n_lon_; }
  int n_lat() const { return n_lat_; }
  double cell_size() const { return cell_; }
  const GridBounds& bounds() const { return bounds_; }

  /// kOutside for dry or out-of-bounds points.
  State point_to_state(double lon, double lat) const;
  std::optional<State> state_of(BoxIndex box) const;
  State require_state(BoxIndex box) const;
  BoxIndex box_of(State s) const;
  /// (lon, lat) of the box center.
  std::pair<double, double> center(State s) const;
  double lat_of_row(int row) const { return bounds_.lat_min + (row + 0.5) * cell_; }
  /// Spherical area of the box on a sphere of mean Earth radius.
  double box_area_km2(State s) const;

 private:
  GridBounds bounds_;
  double cell_;
  int n_lon_ = 0, n_lat_ = 0;
  std::vector<std::int64_t> active_;    // state -> box id
  std::vector<State> state_by_box_;     // box id -> state or kOutside
};

GridCovering build_grid(GridBounds bounds, double cell_size, const WetMask& wet);

/// Lines `lon_index,lat_index,wet{0|1}`; boxes not listed are dry.
WetMask load_wet_mask(const std::filesystem::path& p, int n_lon, int n_lat);
WetMask parse_wet_mask(std::string_view text, int n_lon, int n_lat);

/// Keys lon_min, lon_max, lat_min, lat_max, cell_size (default 0.25) and an
/// optional wet_mask path. Without wet_mask every box is wet.
GridCovering load_grid(const std::filesystem::path& config);

struct StickyState {
  State state = kOutside;
  double land_fraction = 0;
};

/// A beaching target cemetery. Label m runs over 1..M.
struct DebrisTarget {
  State state = kOutside;
  int label = 0;
};

/// Role annotations of chain states.
struct StateRoles {
  std::vector<State> leaky;           // sorted, unique
  std::vector<StickyState> sticky;    // sorted by state, unique
  std::vector<DebrisTarget> targets;  // targets[m - 1] has label m
  std::vector<State> sources;         // candidate crash states, in latitude order

  std::size_t target_count() const { return targets.size(); }
  bool is_leaky(State s) const;
  std::optional<double> land_fraction(State s) const;
  /// Target labels whose beaching box is s (several when co-located).
  std::vector<int> targets_at(State s) const;

  /// Sorts, checks uniqueness, open-interval land fractions, debris inside
  /// sticky, label bijection and index range. Throws InputError.
  void validate(std::size_t n_states);
};

StateRoles parse_roles(const GridCovering& g, std::string_view text);
StateRoles load_roles(const GridCovering& g, const std::filesystem::path& p);

}  // namespace driftmc
