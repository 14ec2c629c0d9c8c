#pragma once

#include <Eigen/Dense>

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace clique {

// Strongly typed integer identifier; Tag only distinguishes the types.
template <typename Tag>
struct Id {
  std::int32_t value{0};

  constexpr Id() = default;
  constexpr explicit Id(std::int32_t v) : value(v) {}

  friend constexpr auto operator<=>(const Id&, const Id&) = default;
};

using CameraId = Id<struct CameraTag>;
using GeoGroupId = Id<struct GeoGroupTag>;
using ObjectId = Id<struct ObjectTag>;

using Feature = Eigen::VectorXd;

class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Unit-normalized copy of v. Rejects vectors with fewer than two components,
// non-finite components, or zero norm.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> normalized(
    const Eigen::MatrixBase<Derived>& v) {
  using Scalar = typename Derived::Scalar;
  if (v.size() < 2) throw InvalidInput("feature needs at least 2 components");
  if (!v.allFinite()) throw InvalidInput("feature has non-finite components");
  const Scalar n = v.norm();
  if (!(n > Scalar(0))) throw InvalidInput("cannot normalize a zero vector");
  return v / n;
}

Feature normalize(const Feature& v);

// Euclidean distance; throws on dimension mismatch.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar distance(const Eigen::MatrixBase<DerivedA>& a,
                                   const Eigen::MatrixBase<DerivedB>& b) {
  if (a.size() != b.size()) throw InvalidInput("feature dimension mismatch");
  return (a - b).norm();
}

// Orientation wrapped into [0, 360).
double wrap_degrees(double deg);

// Absolute angular difference folded into [0, 180].
double angular_difference(double a_deg, double b_deg);

struct Posture {
  double orientation_deg{0.0};
  double x{0.0};
  double y{0.0};

  Posture() = default;
  Posture(double orientation, double px, double py)
      : orientation_deg(wrap_degrees(orientation)), x(px), y(py) {}
};

struct Camera {
  CameraId id;
  GeoGroupId group;
  double fps{1.0};
  Posture posture;
};

struct Detection {
  CameraId camera;
  std::int64_t frame_index{0};
  double timestamp_s{0.0};
  Feature feature;
  std::optional<ObjectId> truth;  // evaluation only
};

struct CellId {
  GeoGroupId group;
  std::int32_t window{0};

  friend constexpr auto operator<=>(const CellId&, const CellId&) = default;
};

struct DatasetMeta {
  std::uint64_t seed{0};
  std::string config_hash;
};

struct Dataset {
  std::vector<GeoGroupId> geo_groups;  // sorted, unique
  std::vector<Camera> cameras;         // sorted by id
  std::vector<Detection> detections;
  double duration_s{0.0};
  double window_s{30.0};
  int feature_dim{16};
  DatasetMeta meta;

  const Camera& camera(CameraId id) const;
  std::vector<CameraId> cameras_in(GeoGroupId group) const;
  int window_count() const;
  std::int32_t window_of(double timestamp_s) const;

  // Checks ids, groups, timestamps and feature dimensions; throws InvalidInput.
  void validate() const;
};

// Map from object to the cells its detections fall in, for window_s.
std::map<ObjectId, std::set<CellId>> truth_cells(const Dataset& ds);
std::map<ObjectId, std::set<CellId>> truth_cells(const Dataset& ds, double window_s);

struct Cell {
  CellId id;
  double t_start{0.0};
  double t_end{0.0};
  // Every camera of the group has an entry, possibly empty.
  std::map<CameraId, std::vector<Detection>> clips;

  std::size_t detection_count() const;
};

// Tiles [0, duration) into half-open windows per geo-group. Cells are ordered
// window-major, then by group id. Within a clip detections are sorted by
// content so the result does not depend on input ordering.
std::vector<Cell> build_cells(const Dataset& ds, double window_s);

// Stable ordering used for detections everywhere a canonical order is needed.
bool detection_less(const Detection& a, const Detection& b);

}  // namespace clique

template <typename Tag>
struct std::hash<clique::Id<Tag>> {
  std::size_t operator()(const clique::Id<Tag>& id) const noexcept {
    return std::hash<std::int32_t>{}(id.value);
  }
};
