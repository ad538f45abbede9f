#include "airbeam/array.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "airbeam/errors.hpp"

namespace airbeam {

double norm(Vec3 v) noexcept { return std::sqrt(dot(v, v)); }

MicrophoneArray::MicrophoneArray(std::vector<Vec3> positions) : positions_(std::move(positions)) {
  if (positions_.empty()) throw InvalidArgument("microphone array is empty");
  for (const auto& p : positions_) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z))
      throw InvalidArgument("microphone position is not finite");
  }
  // Duplicate check on a sorted copy keeps this O(N log N) for large lattices.
  std::vector<Vec3> sorted = positions_;
  std::sort(sorted.begin(), sorted.end(), [](const Vec3& a, const Vec3& b) {
    if (a.x != b.x) return a.x < b.x;
    if (a.y != b.y) return a.y < b.y;
    return a.z < b.z;
  });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i] == sorted[i - 1]) throw InvalidArgument("two microphones share a position");
  }
}

Vec3 MicrophoneArray::centroid() const noexcept {
  Vec3 sum{};
  for (const auto& p : positions_) sum = sum + p;
  return (1.0 / static_cast<double>(positions_.size())) * sum;
}

double MicrophoneArray::aperture_diameter() const noexcept {
  double best = 0.0;
  for (std::size_t i = 0; i < positions_.size(); ++i)
    for (std::size_t j = i + 1; j < positions_.size(); ++j)
      best = std::max(best, norm(positions_[i] - positions_[j]));
  return best;
}

Direction Direction::from_degrees(double azimuth_deg, double elevation_deg) {
  Direction d{deg_to_rad(azimuth_deg), deg_to_rad(elevation_deg)};
  d.validate();
  return d;
}

Vec3 Direction::unit_vector() const noexcept {
  const double ce = std::cos(elevation);
  return {ce * std::cos(azimuth), ce * std::sin(azimuth), std::sin(elevation)};
}

void Direction::validate() const {
  constexpr double slack = 1e-12;
  if (!std::isfinite(azimuth) || !std::isfinite(elevation))
    throw InvalidArgument("direction angles must be finite");
  if (azimuth < -kPi - slack || azimuth > kPi + slack)
    throw InvalidArgument("azimuth outside [-pi, pi]: " + std::to_string(azimuth));
  if (elevation < -kPi / 2 - slack || elevation > kPi / 2 + slack)
    throw InvalidArgument("elevation outside [-pi/2, pi/2]: " + std::to_string(elevation));
}

DirectionGrid::DirectionGrid(std::vector<Direction> directions, std::optional<Shape> shape)
    : directions_(std::move(directions)), shape_(shape) {
  if (directions_.empty()) throw InvalidArgument("direction grid is empty");
  for (const auto& d : directions_) d.validate();
  if (shape_ && shape_->elevation_count * shape_->azimuth_count != directions_.size())
    throw InvalidArgument("direction grid shape does not match its size");
}

std::vector<std::size_t> DirectionGrid::neighbours(std::size_t index) const {
  std::vector<std::size_t> out;
  if (shape_) {
    const std::size_t cols = shape_->azimuth_count;
    const std::size_t r = index / cols;
    const std::size_t c = index % cols;
    if (c > 0) out.push_back(index - 1);
    if (c + 1 < cols) out.push_back(index + 1);
    if (r > 0) out.push_back(index - cols);
    if (r + 1 < shape_->elevation_count) out.push_back(index + cols);
  } else {
    if (index > 0) out.push_back(index - 1);
    if (index + 1 < directions_.size()) out.push_back(index + 1);
  }
  return out;
}

namespace {

std::size_t sweep_count(double lo, double hi, double step) {
  if (!(step > 0.0)) throw InvalidArgument("grid step must be positive");
  if (!(lo <= hi)) throw InvalidArgument("grid range is empty (min > max)");
  // Relative slack so that e.g. 180 deg / 0.05 deg lands on 3600, not 3599.
  const double span = (hi - lo) / step;
  return static_cast<std::size_t>(std::floor(span + 1e-9 * std::max(1.0, span))) + 1;
}

}  // namespace

DirectionGrid azimuth_scan_grid(double az_min, double az_max, double step, double elevation) {
  const std::size_t count = sweep_count(az_min, az_max, step);
  std::vector<Direction> dirs;
  dirs.reserve(count);
  for (std::size_t k = 0; k < count; ++k)
    dirs.push_back({az_min + static_cast<double>(k) * step, elevation});
  return DirectionGrid(std::move(dirs));
}

DirectionGrid az_el_grid(double az_min, double az_max, double az_step, double el_min, double el_max,
                         double el_step) {
  const std::size_t n_az = sweep_count(az_min, az_max, az_step);
  const std::size_t n_el = sweep_count(el_min, el_max, el_step);
  std::vector<Direction> dirs;
  dirs.reserve(n_az * n_el);
  for (std::size_t e = 0; e < n_el; ++e)
    for (std::size_t a = 0; a < n_az; ++a)
      dirs.push_back({az_min + static_cast<double>(a) * az_step, el_min + static_cast<double>(e) * el_step});
  return DirectionGrid(std::move(dirs), DirectionGrid::Shape{n_el, n_az});
}

DelayTable::DelayTable(Matrix delays, DirectionGrid grid, double sound_speed, Vec3 reference)
    : delays_(std::move(delays)), grid_(std::move(grid)), sound_speed_(sound_speed), reference_(reference) {
  if (delays_.rows() != grid_.size()) throw InvalidArgument("delay table rows must match the grid");
}

DelayTable DelayTable::with_channel_offsets(std::span<const double> offsets) const {
  if (offsets.size() != mic_count()) throw InvalidArgument("channel offset count must match microphone count");
  Matrix shifted = delays_;
  for (std::size_t d = 0; d < shifted.rows(); ++d)
    for (std::size_t i = 0; i < shifted.cols(); ++i) shifted(d, i) += offsets[i];
  return DelayTable(std::move(shifted), grid_, sound_speed_, reference_);
}

DelayTable far_field_delays(const MicrophoneArray& array, const DirectionGrid& grid, double sound_speed,
                            Vec3 reference) {
  if (!(sound_speed > 0.0) || !std::isfinite(sound_speed)) throw InvalidArgument("sound speed must be positive");
  Matrix delays(grid.size(), array.size());
  for (std::size_t d = 0; d < grid.size(); ++d) {
    const Vec3 u = grid[d].unit_vector();
    for (std::size_t i = 0; i < array.size(); ++i)
      delays(d, i) = -dot(array[i] - reference, u) / sound_speed;
  }
  return DelayTable(std::move(delays), grid, sound_speed, reference);
}

DelayTable far_field_delays(const MicrophoneArray& array, const DirectionGrid& grid, double sound_speed) {
  return far_field_delays(array, grid, sound_speed, array.centroid());
}

MicrophoneArray hex_circular_array(double radius, double edge) {
  if (!(radius > 0.0) || !(edge > 0.0)) throw InvalidArgument("radius and edge must be positive");
  // Lattice point (i, j) sits at edge * (i + j/2, j*sqrt(3)/2); its squared
  // distance in edge units is the integer i^2 + i*j + j^2, so clipping is exact
  // and the result keeps the full six-fold symmetry of the lattice.
  const double limit = (radius / edge) * (radius / edge);
  const double tolerance = 1e-9 * std::max(1.0, limit);
  const long reach = static_cast<long>(std::ceil(2.0 * radius / edge)) + 1;
  const double h = std::sqrt(3.0) / 2.0;
  std::vector<Vec3> positions;
  for (long j = -reach; j <= reach; ++j) {
    for (long i = -reach; i <= reach; ++i) {
      const double q = static_cast<double>(i * i + i * j + j * j);
      if (q > limit + tolerance) continue;
      positions.push_back({0.0, edge * (static_cast<double>(i) + 0.5 * static_cast<double>(j)),
                           edge * h * static_cast<double>(j)});
    }
  }
  return MicrophoneArray(std::move(positions));
}

MicrophoneArray spiral_array(std::size_t count, double radius) {
  if (count == 0) throw InvalidArgument("spiral array needs at least one microphone");
  if (!(radius > 0.0)) throw InvalidArgument("radius must be positive");
  const double golden_angle = kPi * (3.0 - std::sqrt(5.0));
  std::vector<Vec3> positions;
  positions.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const double r = radius * std::sqrt((static_cast<double>(k) + 0.5) / static_cast<double>(count));
    const double a = golden_angle * static_cast<double>(k);
    positions.push_back({0.0, r * std::cos(a), r * std::sin(a)});
  }
  return MicrophoneArray(std::move(positions));
}

}  // namespace airbeam
