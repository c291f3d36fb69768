#pragma once

#include <Eigen/Dense>
#include <array>
#include <optional>
#include <span>
#include <vector>

namespace lcf {

/// A LiDAR point. Coordinates in meters, optional reflectance channel.
struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double r = 0.0;

  Eigen::Vector3d xyz() const { return {x, y, z}; }
};

/// Oriented 3D box in the LiDAR frame: geometric center, dimensions
/// (length, height, width) and yaw about the vertical (+z) axis.
/// KITTI's bottom-face-center camera-frame convention is converted at the
/// I/O boundary (see kitti_io).
struct Box3D {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  double length = 0.0;  // extent along the heading axis
  double height = 0.0;  // vertical extent
  double width = 0.0;   // lateral extent
  double yaw = 0.0;     // radians, in (-pi, pi]
};

/// Axis-aligned pixel box, x_min <= x_max and y_min <= y_max.
struct Box2D {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return width() * height(); }
  Eigen::Vector2d center() const {
    return {0.5 * (x_min + x_max), 0.5 * (y_min + y_max)};
  }
};

/// Pinhole camera: 3x4 projection from reference-camera homogeneous
/// coordinates to pixel homogeneous coordinates, plus the image extent.
struct CameraModel {
  Eigen::Matrix<double, 3, 4> P = Eigen::Matrix<double, 3, 4>::Zero();
  int image_width = 0;
  int image_height = 0;
};

enum class CameraSide { Left, Right };

struct StereoPair {
  CameraModel left;
  CameraModel right;
  const CameraModel& view(CameraSide side) const {
    return side == CameraSide::Left ? left : right;
  }
};

/// Per-frame calibration: rigid LiDAR -> reference-camera transform and the
/// projection matrices of every stereo view.
struct CalibrationFrame {
  Eigen::Matrix4d lidar_to_cam = Eigen::Matrix4d::Identity();
  std::vector<StereoPair> pairs;

  const CameraModel& view(int pair_index, CameraSide side) const {
    return pairs.at(static_cast<std::size_t>(pair_index)).view(side);
  }
};

/// Implicit 2D line a*x + b*y + c = 0 with a^2 + b^2 = 1.
struct Line2 {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
};

/// Result of projecting one 3D point: pixel coordinates and the depth
/// (third homogeneous coordinate). Points at depth <= eps_depth are flagged
/// instead of divided.
struct Projection {
  Eigen::Vector2d pixel = Eigen::Vector2d::Zero();
  double depth = 0.0;
  bool behind_camera = false;
};

inline constexpr double kDefaultEpsDepth = 1e-6;

/// The 8 vertices of the oriented cuboid. Ordering: bottom face
/// counterclockwise seen from above starting at the (+length/2, +width/2)
/// corner, then the top face in the same order.
std::array<Eigen::Vector3d, 8> box3d_corners(const Box3D& box);

/// Applies T in homogeneous coordinates to each point.
std::vector<Eigen::Vector3d> transform_points(
    std::span<const Eigen::Vector3d> points, const Eigen::Matrix4d& T);

/// Perspective projection of reference-camera points.
std::vector<Projection> project_points(std::span<const Eigen::Vector3d> points,
                                        const CameraModel& cam,
                                        double eps_depth = kDefaultEpsDepth);

Projection project_point(const Eigen::Vector3d& point, const CameraModel& cam,
                         double eps_depth = kDefaultEpsDepth);

/// Tightest axis-aligned box containing all projections not flagged
/// behind-camera; nullopt when every point is behind.
std::optional<Box2D> enclosing_aabb(std::span<const Projection> projections);

/// Intersection over union of axis-aligned boxes, 0 when the union is empty.
double iou_axis_aligned(const Box2D& a, const Box2D& b);

/// Fundamental matrix of the (left, right) view pair, built from the right
/// epipole and the pseudo-inverse of the left projection, normalized to unit
/// Frobenius norm. For corresponding pixels x (left), x' (right):
/// x'^T F x = 0. Throws GeometryError when the camera centers coincide.
Eigen::Matrix3d fundamental_from_projections(const CameraModel& left,
                                             const CameraModel& right);

/// Epipolar line in the right view of a pixel in the left view, normalized.
Line2 epipolar_line(const Eigen::Matrix3d& F, const Eigen::Vector2d& pixel);

/// Perpendicular distance from a point to a normalized line.
double point_line_distance(const Line2& line, const Eigen::Vector2d& point);

/// Epipolar consistency cost between a left-view box and a right-view box:
/// sum of the distances from the right box's top-left and bottom-right
/// corners to the epipolar lines of the matching corners of the left box.
/// F is re-normalized internally, so the result is scale-invariant in F.
double epipolar_box_distance(const Box2D& left_box, const Box2D& right_box,
                             const Eigen::Matrix3d& F);

/// Homogeneous camera center (null space of P), normalized to w = 1 when
/// finite.
Eigen::Vector4d camera_center(const CameraModel& cam);

/// Wraps an angle into (-pi, pi].
double wrap_angle(double angle);

}  // namespace lcf
