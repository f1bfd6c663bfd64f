#include "driftmc/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <string>

#include "driftmc/error.hpp"
#include "driftmc/io.hpp"

namespace driftmc {

namespace {

constexpr double kEarthRadiusKm = 6371.0088;

int checked_count(double extent, double cell, const char* axis) {
  const double ratio = extent / cell;
  const double rounded = std::round(ratio);
  if (std::abs(rounded * cell - extent) > 1e-9)
    throw InputError(std::string("cell size does not divide the ") + axis + " extent");
  return static_cast<int>(rounded);
}

}  // namespace

GridCovering::GridCovering(GridBounds bounds, double cell_size, const WetMask& wet)
    : bounds_(bounds), cell_(cell_size) {
  if (!(cell_size > 0)) throw InputError("cell size must be positive");
  if (!(bounds.lon_max > bounds.lon_min) || !(bounds.lat_max > bounds.lat_min))
    throw InputError("degenerate grid bounds");
  n_lon_ = checked_count(bounds.lon_max - bounds.lon_min, cell_size, "longitude");
  n_lat_ = checked_count(bounds.lat_max - bounds.lat_min, cell_size, "latitude");
  const auto n_boxes = static_cast<std::int64_t>(n_lon_) * n_lat_;
  if (!wet.empty() && static_cast<std::int64_t>(wet.size()) != n_boxes)
    throw InputError("wet mask size does not match the grid");
  state_by_box_.assign(static_cast<std::size_t>(n_boxes), kOutside);
  for (std::int64_t id = 0; id < n_boxes; ++id) {
    if (!wet.empty() && !wet[static_cast<std::size_t>(id)]) continue;
    state_by_box_[static_cast<std::size_t>(id)] = static_cast<State>(active_.size());
    active_.push_back(id);
  }
  if (active_.empty()) throw InputError("wet mask has no wet boxes");
}

State GridCovering::point_to_state(double lon, double lat) const {
  if (!std::isfinite(lon) || !std::isfinite(lat)) return kOutside;
  // Bring longitude into [lon_min, lon_min + 360).
  lon = bounds_.lon_min + std::fmod(std::fmod(lon - bounds_.lon_min, 360.0) + 360.0, 360.0);
  if (lon < bounds_.lon_min || lon >= bounds_.lon_max) return kOutside;
  if (lat < bounds_.lat_min || lat >= bounds_.lat_max) return kOutside;
  const int i = std::min(n_lon_ - 1, static_cast<int>(std::floor((lon - bounds_.lon_min) / cell_)));
  const int j = std::min(n_lat_ - 1, static_cast<int>(std::floor((lat - bounds_.lat_min) / cell_)));
  return state_by_box_[static_cast<std::size_t>(j) * n_lon_ + i];
}

std::optional<State> GridCovering::state_of(BoxIndex box) const {
  if (box.lon < 0 || box.lon >= n_lon_ || box.lat < 0 || box.lat >= n_lat_) return std::nullopt;
  const State s = state_by_box_[static_cast<std::size_t>(box.lat) * n_lon_ + box.lon];
  if (s == kOutside) return std::nullopt;
  return s;
}

State GridCovering::require_state(BoxIndex box) const {
  auto s = state_of(box);
  if (!s)
    throw InputError("box (" + std::to_string(box.lon) + "," + std::to_string(box.lat) +
                     ") is not an active box");
  return *s;
}

BoxIndex GridCovering::box_of(State s) const {
  const auto id = active_.at(static_cast<std::size_t>(s));
  return {static_cast<int>(id % n_lon_), static_cast<int>(id / n_lon_)};
}

std::pair<double, double> GridCovering::center(State s) const {
  const auto b = box_of(s);
  return {bounds_.lon_min + (b.lon + 0.5) * cell_, lat_of_row(b.lat)};
}

double GridCovering::box_area_km2(State s) const {
  const auto b = box_of(s);
  constexpr double deg = std::numbers::pi / 180.0;
  const double lat0 = bounds_.lat_min + b.lat * cell_;
  return kEarthRadiusKm * kEarthRadiusKm * (cell_ * deg) *
         (std::sin((lat0 + cell_) * deg) - std::sin(lat0 * deg));
}

GridCovering build_grid(GridBounds bounds, double cell_size, const WetMask& wet) {
  return GridCovering(bounds, cell_size, wet);
}

WetMask parse_wet_mask(std::string_view text, int n_lon, int n_lat) {
  WetMask wet(static_cast<std::size_t>(n_lon) * n_lat, false);
  std::size_t line_no = 0;
  for (auto line : io::split(text, '\n')) {
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    auto f = io::split(line, ',');
    if (f.size() != 3) throw InputError("wet mask line " + std::to_string(line_no) + ": expected 3 fields");
    if (!io::to_int(f[0]) && line_no == 1) continue;  // header
    const auto i = io::require_int(f[0], "lon_index");
    const auto j = io::require_int(f[1], "lat_index");
    const auto w = io::require_int(f[2], "wet flag");
    if (i < 0 || i >= n_lon || j < 0 || j >= n_lat)
      throw InputError("wet mask line " + std::to_string(line_no) + ": box index out of range");
    if (w != 0 && w != 1) throw InputError("wet mask line " + std::to_string(line_no) + ": flag must be 0 or 1");
    wet[static_cast<std::size_t>(j) * n_lon + i] = (w == 1);
  }
  return wet;
}

WetMask load_wet_mask(const std::filesystem::path& p, int n_lon, int n_lat) {
  return parse_wet_mask(io::read_file(p), n_lon, n_lat);
}

GridCovering load_grid(const std::filesystem::path& config) {
  const auto cfg = io::KeyValueConfig::load(config);
  GridBounds b{cfg.require_double("lon_min"), cfg.require_double("lon_max"), cfg.require_double("lat_min"),
               cfg.require_double("lat_max")};
  const double cell = cfg.get_double("cell_size", 0.25);
  WetMask wet;
  if (cfg.has("wet_mask")) {
    // Build once without a mask to validate bounds and obtain the box counts.
    const GridCovering probe(b, cell, {});
    wet = load_wet_mask(cfg.path("wet_mask"), probe.n_lon(), probe.n_lat());
  }
  return GridCovering(b, cell, wet);
}

bool StateRoles::is_leaky(State s) const { return std::binary_search(leaky.begin(), leaky.end(), s); }

std::optional<double> StateRoles::land_fraction(State s) const {
  auto it = std::lower_bound(sticky.begin(), sticky.end(), s,
                             [](const StickyState& a, State b) { return a.state < b; });
  if (it == sticky.end() || it->state != s) return std::nullopt;
  return it->land_fraction;
}

std::vector<int> StateRoles::targets_at(State s) const {
  std::vector<int> out;
  for (const auto& t : targets)
    if (t.state == s) out.push_back(t.label);
  return out;
}

void StateRoles::validate(std::size_t n_states) {
  const auto in_range = [&](State s) { return s >= 0 && static_cast<std::size_t>(s) < n_states; };
  for (State s : leaky)
    if (!in_range(s)) throw InputError("leaky state out of range");
  std::sort(leaky.begin(), leaky.end());
  leaky.erase(std::unique(leaky.begin(), leaky.end()), leaky.end());

  std::sort(sticky.begin(), sticky.end(), [](auto& a, auto& b) { return a.state < b.state; });
  for (std::size_t k = 0; k < sticky.size(); ++k) {
    if (!in_range(sticky[k].state)) throw InputError("sticky state out of range");
    if (k > 0 && sticky[k].state == sticky[k - 1].state)
      throw InputError("sticky state " + std::to_string(sticky[k].state) + " listed twice");
    const double ell = sticky[k].land_fraction;
    if (!(ell > 0.0 && ell < 1.0))
      throw InputError("land fraction of sticky state " + std::to_string(sticky[k].state) +
                       " must lie strictly inside (0,1)");
  }

  std::sort(targets.begin(), targets.end(), [](auto& a, auto& b) { return a.label < b.label; });
  for (std::size_t k = 0; k < targets.size(); ++k) {
    if (targets[k].label != static_cast<int>(k) + 1)
      throw InputError("debris target labels must be exactly 1..M without gaps or repeats");
    if (!land_fraction(targets[k].state))
      throw InputError("debris state " + std::to_string(targets[k].state) + " is not sticky");
  }

  std::set<State> seen;
  for (State s : sources) {
    if (!in_range(s)) throw InputError("source state out of range");
    if (!seen.insert(s).second) throw InputError("source state " + std::to_string(s) + " listed twice");
  }
}

StateRoles parse_roles(const GridCovering& g, std::string_view text) {
  StateRoles roles;
  std::size_t line_no = 0;
  for (auto line : io::split(text, '\n')) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = io::trim(line.substr(0, hash));
    if (line.empty()) continue;
    const auto colon = line.find(':');
    const auto where = "roles line " + std::to_string(line_no);
    if (colon == std::string_view::npos) throw InputError(where + ": expected 'kind: fields'");
    const auto kind = io::trim(line.substr(0, colon));
    const auto f = io::split(line.substr(colon + 1), ',');
    auto state_at = [&](std::size_t expected) {
      if (f.size() != expected) throw InputError(where + ": wrong number of fields");
      BoxIndex b{static_cast<int>(io::require_int(f[0], "lon_index")),
                 static_cast<int>(io::require_int(f[1], "lat_index"))};
      auto s = g.state_of(b);
      if (!s) throw InputError(where + ": box is not active");
      return *s;
    };
    if (kind == "leaky") {
      roles.leaky.push_back(state_at(2));
    } else if (kind == "sticky") {
      const State s = state_at(3);
      roles.sticky.push_back({s, io::require_double(f[2], "land fraction")});
    } else if (kind == "debris") {
      const State s = state_at(3);
      roles.targets.push_back({s, static_cast<int>(io::require_int(f[2], "target label"))});
    } else if (kind == "source") {
      roles.sources.push_back(state_at(2));
    } else {
      throw InputError(where + ": unknown record kind '" + std::string(kind) + "'");
    }
  }
  roles.validate(g.size());
  return roles;
}

StateRoles load_roles(const GridCovering& g, const std::filesystem::path& p) {
  return parse_roles(g, io::read_file(p));
}

}  // namespace driftmc
