#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "airbeam/matrix.hpp"

namespace airbeam {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kDefaultSoundSpeed = 343.0;  // m/s

constexpr double deg_to_rad(double deg) noexcept { return deg * kPi / 180.0; }
constexpr double rad_to_deg(double rad) noexcept { return rad * 180.0 / kPi; }

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend constexpr Vec3 operator+(Vec3 a, Vec3 b) noexcept { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend constexpr Vec3 operator-(Vec3 a, Vec3 b) noexcept { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend constexpr Vec3 operator*(double s, Vec3 a) noexcept { return {s * a.x, s * a.y, s * a.z}; }
  friend constexpr bool operator==(Vec3, Vec3) = default;
};

constexpr double dot(Vec3 a, Vec3 b) noexcept { return a.x * b.x + a.y * b.y + a.z * b.z; }
double norm(Vec3 v) noexcept;

/// Sensor positions in meters. Immutable once built.
class MicrophoneArray {
 public:
  /// Throws InvalidArgument when empty, non-finite, or two positions coincide.
  explicit MicrophoneArray(std::vector<Vec3> positions);

  std::size_t size() const noexcept { return positions_.size(); }
  std::span<const Vec3> positions() const noexcept { return positions_; }
  const Vec3& operator[](std::size_t i) const noexcept { return positions_[i]; }

  Vec3 centroid() const noexcept;
  /// Largest distance between any two microphones.
  double aperture_diameter() const noexcept;

 private:
  std::vector<Vec3> positions_;
};

/// Azimuth/elevation in radians. Azimuth 0, elevation 0 points along +x;
/// positive azimuth turns toward +y, positive elevation toward +z.
struct Direction {
  double azimuth = 0.0;
  double elevation = 0.0;

  static Direction from_degrees(double azimuth_deg, double elevation_deg);
  /// Unit vector from the array toward the direction.
  Vec3 unit_vector() const noexcept;
  void validate() const;
};

/// Ordered list of look directions. Grids built by `az_el_grid` also carry
/// their 2-D shape (elevation rows x azimuth columns) for neighbour queries.
class DirectionGrid {
 public:
  struct Shape {
    std::size_t elevation_count = 0;
    std::size_t azimuth_count = 0;
  };

  explicit DirectionGrid(std::vector<Direction> directions, std::optional<Shape> shape = std::nullopt);

  std::size_t size() const noexcept { return directions_.size(); }
  const Direction& operator[](std::size_t i) const noexcept { return directions_[i]; }
  std::span<const Direction> directions() const noexcept { return directions_; }
  const std::optional<Shape>& shape() const noexcept { return shape_; }

  /// Indices adjacent to `index`: 4-neighbourhood on a 2-D grid, previous/next otherwise.
  std::vector<std::size_t> neighbours(std::size_t index) const;

 private:
  std::vector<Direction> directions_;
  std::optional<Shape> shape_;
};

/// Inclusive azimuth sweep at fixed elevation.
DirectionGrid azimuth_scan_grid(double az_min, double az_max, double step, double elevation);

/// Rectangular azimuth x elevation grid, elevation-major (one row per elevation).
DirectionGrid az_el_grid(double az_min, double az_max, double az_step, double el_min, double el_max,
                         double el_step);

/// Far-field pre-steering delays in seconds.
///
/// delay(i, d) = -((p_i - reference) . u_d) / c with u_d the unit vector toward
/// direction d. A plane wave from d reaches microphone i at t0 + delay(i, d), so
/// reading each channel at t + delay(i, d) aligns the wavefront across channels.
class DelayTable {
 public:
  DelayTable(Matrix delays, DirectionGrid grid, double sound_speed, Vec3 reference);

  std::size_t mic_count() const noexcept { return delays_.cols(); }
  std::size_t direction_count() const noexcept { return delays_.rows(); }
  double delay(std::size_t mic, std::size_t direction) const noexcept { return delays_(direction, mic); }
  /// All microphone delays for one direction.
  std::span<const double> for_direction(std::size_t direction) const noexcept { return delays_.row(direction); }

  const DirectionGrid& grid() const noexcept { return grid_; }
  double sound_speed() const noexcept { return sound_speed_; }
  const Vec3& reference() const noexcept { return reference_; }

  /// Copy with a fixed per-channel offset (seconds) added to every direction.
  DelayTable with_channel_offsets(std::span<const double> offsets) const;

 private:
  Matrix delays_;  // direction-major: rows = directions, cols = microphones
  DirectionGrid grid_;
  double sound_speed_;
  Vec3 reference_;
};

DelayTable far_field_delays(const MicrophoneArray& array, const DirectionGrid& grid, double sound_speed,
                            Vec3 reference);
/// Reference at the array centroid.
DelayTable far_field_delays(const MicrophoneArray& array, const DirectionGrid& grid,
                            double sound_speed = kDefaultSoundSpeed);

/// Triangular ("hexagonal") lattice with the given edge length, clipped to a disc.
/// One microphone sits at the origin; the disc lies in the y-z plane facing +x.
MicrophoneArray hex_circular_array(double radius, double edge);

/// Fermat-spiral (sunflower) layout of `count` microphones within a disc of the
/// given radius in the y-z plane. Deterministic and aperiodic.
MicrophoneArray spiral_array(std::size_t count, double radius);

}  // namespace airbeam
