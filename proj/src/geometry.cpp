#include "lcfusion/geometry.hpp"

#include <Eigen/SVD>
#include <cmath>

#include "lcfusion/errors.hpp"

namespace lcf {

std::array<Eigen::Vector3d, 8> box3d_corners(const Box3D& box) {
  const double hl = 0.5 * box.length;
  const double hw = 0.5 * box.width;
  const double hh = 0.5 * box.height;
  // Bottom face counterclockwise seen from above, starting at (+l/2, +w/2).
  const double xs[4] = {hl, -hl, -hl, hl};
  const double ys[4] = {hw, hw, -hw, -hw};
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);

  std::array<Eigen::Vector3d, 8> corners;
  for (int i = 0; i < 4; ++i) {
    const double x = c * xs[i] - s * ys[i];
    const double y = s * xs[i] + c * ys[i];
    corners[static_cast<std::size_t>(i)] =
        box.center + Eigen::Vector3d(x, y, -hh);
    corners[static_cast<std::size_t>(i + 4)] =
        box.center + Eigen::Vector3d(x, y, hh);
  }
  return corners;
}

std::vector<Eigen::Vector3d> transform_points(
    std::span<const Eigen::Vector3d> points, const Eigen::Matrix4d& T) {
  std::vector<Eigen::Vector3d> out;
  out.reserve(points.size());
  for (const auto& p : points) {
    const Eigen::Vector4d h = T * p.homogeneous();
    out.push_back(h.head<3>() / h(3));
  }
  return out;
}

Projection project_point(const Eigen::Vector3d& point, const CameraModel& cam,
                         double eps_depth) {
  const Eigen::Vector3d h = cam.P * point.homogeneous();
  Projection proj;
  proj.depth = h(2);
  if (h(2) <= eps_depth) {
    proj.behind_camera = true;
    return proj;
  }
  proj.pixel = h.head<2>() / h(2);
  return proj;
}

std::vector<Projection> project_points(std::span<const Eigen::Vector3d> points,
                                       const CameraModel& cam,
                                       double eps_depth) {
  std::vector<Projection> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(project_point(p, cam, eps_depth));
  return out;
}

std::optional<Box2D> enclosing_aabb(std::span<const Projection> projections) {
  bool any = false;
  Box2D box;
  for (const auto& proj : projections) {
    if (proj.behind_camera) continue;
    if (!any) {
      box.x_min = box.x_max = proj.pixel.x();
      box.y_min = box.y_max = proj.pixel.y();
      any = true;
    } else {
      box.x_min = std::min(box.x_min, proj.pixel.x());
      box.x_max = std::max(box.x_max, proj.pixel.x());
      box.y_min = std::min(box.y_min, proj.pixel.y());
      box.y_max = std::max(box.y_max, proj.pixel.y());
    }
  }
  if (!any) return std::nullopt;
  return box;
}

double iou_axis_aligned(const Box2D& a, const Box2D& b) {
  const double ix = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double iy = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  if (ix <= 0.0 || iy <= 0.0) return 0.0;
  const double inter = ix * iy;
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return 0.0;
  return inter / uni;
}

Eigen::Vector4d camera_center(const CameraModel& cam) {
  Eigen::JacobiSVD<Eigen::Matrix<double, 3, 4>> svd(cam.P,
                                                    Eigen::ComputeFullV);
  Eigen::Vector4d c = svd.matrixV().col(3);
  if (std::abs(c(3)) > 1e-12 * c.head<3>().norm()) c /= c(3);
  return c;
}

Eigen::Matrix3d fundamental_from_projections(const CameraModel& left,
                                             const CameraModel& right) {
  Eigen::JacobiSVD<Eigen::Matrix<double, 3, 4>> svd(left.P,
                                                    Eigen::ComputeFullV);
  const Eigen::Vector4d c = svd.matrixV().col(3);
  const Eigen::Vector3d e = right.P * c;
  if (e.norm() <= 1e-10 * right.P.norm()) {
    throw GeometryError(
        "fundamental_from_projections: coincident camera centers");
  }
  const Eigen::Matrix<double, 4, 3> pinv =
      left.P.completeOrthogonalDecomposition().pseudoInverse();
  Eigen::Matrix3d cross;
  cross << 0.0, -e.z(), e.y(),  //
      e.z(), 0.0, -e.x(),       //
      -e.y(), e.x(), 0.0;
  Eigen::Matrix3d F = cross * (right.P * pinv);
  const double norm = F.norm();
  if (norm <= 0.0) {
    throw GeometryError("fundamental_from_projections: degenerate geometry");
  }
  F /= norm;
  // Fix the sign so F is unique: largest-magnitude entry positive.
  Eigen::Index r = 0, cidx = 0;
  F.cwiseAbs().maxCoeff(&r, &cidx);
  if (F(r, cidx) < 0.0) F = -F;
  return F;
}

Line2 epipolar_line(const Eigen::Matrix3d& F, const Eigen::Vector2d& pixel) {
  const Eigen::Vector3d l = F * pixel.homogeneous();
  const double norm = std::hypot(l(0), l(1));
  if (norm <= 1e-15 * (std::abs(l(2)) + 1.0)) {
    // The pixel is (numerically) the epipole: no constraint, zero line.
    return Line2{0.0, 0.0, 0.0};
  }
  return Line2{l(0) / norm, l(1) / norm, l(2) / norm};
}

double point_line_distance(const Line2& line, const Eigen::Vector2d& point) {
  const double norm = std::hypot(line.a, line.b);
  if (norm <= 0.0) return 0.0;
  return std::abs(line.a * point.x() + line.b * point.y() + line.c) / norm;
}

double epipolar_box_distance(const Box2D& left_box, const Box2D& right_box,
                             const Eigen::Matrix3d& F) {
  const double norm = F.norm();
  if (norm <= 0.0) {
    throw GeometryError("epipolar_box_distance: zero fundamental matrix");
  }
  const Eigen::Matrix3d Fn = F / norm;
  const Eigen::Vector2d c1(left_box.x_min, left_box.y_min);
  const Eigen::Vector2d c2(left_box.x_max, left_box.y_max);
  const Eigen::Vector2d c1p(right_box.x_min, right_box.y_min);
  const Eigen::Vector2d c2p(right_box.x_max, right_box.y_max);
  return point_line_distance(epipolar_line(Fn, c1), c1p) +
         point_line_distance(epipolar_line(Fn, c2), c2p);
}

double wrap_angle(double angle) {
  if (angle > -M_PI && angle <= M_PI) return angle;
  double a = std::fmod(angle + M_PI, 2.0 * M_PI);
  if (a <= 0.0) a += 2.0 * M_PI;
  return a - M_PI;
}

}  // namespace lcf
