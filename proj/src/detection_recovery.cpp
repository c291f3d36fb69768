#include "lcfusion/detection_recovery.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "lcfusion/assignment.hpp"
#include "lcfusion/errors.hpp"

namespace lcf {
namespace {

using Vec2 = Eigen::Vector2d;

bool canonical_2d_before(const Detection2D& a, const Detection2D& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.box.x_min != b.box.x_min) return a.box.x_min < b.box.x_min;
  if (a.box.y_min != b.box.y_min) return a.box.y_min < b.box.y_min;
  if (a.box.x_max != b.box.x_max) return a.box.x_max < b.box.x_max;
  if (a.box.y_max != b.box.y_max) return a.box.y_max < b.box.y_max;
  return a.label < b.label;
}

void check_stereo_sides(const Detection2D& left, const Detection2D& right) {
  if (left.view.pair != right.view.pair ||
      left.view.side != CameraSide::Left ||
      right.view.side != CameraSide::Right) {
    throw DataError(
        "detection_recovery: detections must form one stereo pair");
  }
}

const CameraModel& pair_view(const CalibrationFrame& calib, int pair,
                             CameraSide side) {
  if (pair < 0 || pair >= static_cast<int>(calib.pairs.size())) {
    throw ConfigError("detection_recovery: stereo pair " +
                      std::to_string(pair) + " absent from the calibration");
  }
  return calib.view(pair, side);
}

struct BevRay {
  Vec2 origin;
  Vec2 dir;
};

// Ground-plane projection of the viewing ray of one pixel, in the LiDAR
// frame. Parameter t > 0 runs toward positive camera depth.
BevRay bev_pixel_ray(const CameraModel& cam, const Eigen::Matrix4d& cam_to_lidar,
                     double u, double v) {
  const Eigen::Matrix3d M = cam.P.leftCols<3>();
  const Eigen::Matrix3d Minv = M.inverse();
  const Eigen::Vector3d center_cam = -Minv * cam.P.col(3);
  const Eigen::Vector3d dir_cam = Minv * Eigen::Vector3d(u, v, 1.0);
  const Eigen::Vector3d center =
      (cam_to_lidar * center_cam.homogeneous()).head<3>();
  const Eigen::Vector3d dir = cam_to_lidar.topLeftCorner<3, 3>() * dir_cam;
  return BevRay{{center.x(), center.y()}, {dir.x(), dir.y()}};
}

// Intersection of two BEV rays, requiring both parameters positive.
std::optional<Vec2> intersect_rays(const BevRay& a, const BevRay& b) {
  const double denom = a.dir.x() * b.dir.y() - a.dir.y() * b.dir.x();
  const double scale = a.dir.norm() * b.dir.norm();
  if (!(std::abs(denom) > 1e-12 * scale)) return std::nullopt;
  const Vec2 d = b.origin - a.origin;
  const double ta = (d.x() * b.dir.y() - d.y() * b.dir.x()) / denom;
  const double tb = (d.x() * a.dir.y() - d.y() * a.dir.x()) / denom;
  if (!(ta > 0.0) || !(tb > 0.0)) return std::nullopt;
  return a.origin + ta * a.dir;
}

std::optional<Box2D> project_box3d(const Box3D& box,
                                   const Eigen::Matrix4d& lidar_to_cam,
                                   const CameraModel& cam, double eps_depth) {
  const auto corners = box3d_corners(box);
  const auto cam_pts = transform_points(corners, lidar_to_cam);
  const auto projections = project_points(cam_pts, cam, eps_depth);
  return enclosing_aabb(projections);
}

bool inside_box(const Box2D& box, const Vec2& p) {
  return p.x() >= box.x_min && p.x() <= box.x_max && p.y() >= box.y_min &&
         p.y() <= box.y_max;
}

}  // namespace

Box2D enlarge_box(const Box2D& box, double e, int image_width,
                  int image_height) {
  const Vec2 center = box.center();
  const double hw = 0.5 * box.width() * (1.0 + e);
  const double hh = 0.5 * box.height() * (1.0 + e);
  Box2D out;
  out.x_min = std::clamp(center.x() - hw, 0.0, double(image_width - 1));
  out.x_max = std::clamp(center.x() + hw, 0.0, double(image_width - 1));
  out.y_min = std::clamp(center.y() - hh, 0.0, double(image_height - 1));
  out.y_max = std::clamp(center.y() + hh, 0.0, double(image_height - 1));
  return out;
}

std::vector<std::pair<Detection2D, Detection2D>> match_stereo(
    const std::vector<Detection2D>& left,
    const std::vector<Detection2D>& right, const Eigen::Matrix3d& F,
    double d_max, bool class_gating) {
  std::vector<std::pair<Detection2D, Detection2D>> out;
  if (left.empty() || right.empty()) return out;

  std::vector<Detection2D> ls = left;
  std::vector<Detection2D> rs = right;
  std::sort(ls.begin(), ls.end(), canonical_2d_before);
  std::sort(rs.begin(), rs.end(), canonical_2d_before);

  Eigen::MatrixXd cost(static_cast<Eigen::Index>(ls.size()),
                       static_cast<Eigen::Index>(rs.size()));
  for (std::size_t i = 0; i < ls.size(); ++i) {
    for (std::size_t j = 0; j < rs.size(); ++j) {
      double c;
      if (class_gating && ls[i].label != rs[j].label) {
        c = kForbiddenCost;
      } else {
        c = epipolar_box_distance(ls[i].box, rs[j].box, F);
      }
      cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = c;
    }
  }

  const AssignmentResult assignment =
      solve_assignment(cost, AssignSense::Minimize);
  for (const auto& [i, j] : assignment.pairs) {
    const double c =
        cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    if (c > d_max) continue;
    out.emplace_back(ls[static_cast<std::size_t>(i)],
                     rs[static_cast<std::size_t>(j)]);
  }
  return out;
}

FrustumProposal crop_frustum_intersection(const std::vector<Point3>& cloud,
                                          const Detection2D& left,
                                          const Detection2D& right,
                                          const CalibrationFrame& calib,
                                          double enlargement,
                                          double eps_depth) {
  check_stereo_sides(left, right);
  const CameraModel& cam_l = pair_view(calib, left.view.pair, CameraSide::Left);
  const CameraModel& cam_r =
      pair_view(calib, left.view.pair, CameraSide::Right);
  if (cam_l.image_width <= 0 || cam_l.image_height <= 0 ||
      cam_r.image_width <= 0 || cam_r.image_height <= 0) {
    throw DataError("crop_frustum_intersection: camera image size unset");
  }

  const Box2D box_l =
      enlarge_box(left.box, enlargement, cam_l.image_width, cam_l.image_height);
  const Box2D box_r = enlarge_box(right.box, enlargement, cam_r.image_width,
                                  cam_r.image_height);

  FrustumProposal prop;
  prop.left = left;
  prop.right = right;
  prop.enlargement = enlargement;
  for (const Point3& p : cloud) {
    const Eigen::Vector3d cam_pt =
        (calib.lidar_to_cam * p.xyz().homogeneous()).head<3>();
    const Projection proj_l = project_point(cam_pt, cam_l, eps_depth);
    if (proj_l.behind_camera || !inside_box(box_l, proj_l.pixel)) continue;
    const Projection proj_r = project_point(cam_pt, cam_r, eps_depth);
    if (proj_r.behind_camera || !inside_box(box_r, proj_r.pixel)) continue;
    prop.points.push_back(p);
  }
  return prop;
}

std::optional<Box3D> localize_geometric_baseline(
    const FrustumProposal& prop, const std::string& label,
    const std::map<std::string, AnchorDims>& anchors,
    const CalibrationFrame& calib) {
  const auto anchor_it = anchors.find(label);
  if (anchor_it == anchors.end()) {
    throw ConfigError("localize_geometric_baseline: no anchor for class \"" +
                      label + "\"");
  }
  const AnchorDims& anchor = anchor_it->second;
  const int pair = prop.left.view.pair;
  const CameraModel& cam_l = pair_view(calib, pair, CameraSide::Left);
  const CameraModel& cam_r = pair_view(calib, pair, CameraSide::Right);
  const Eigen::Matrix4d cam_to_lidar = calib.lidar_to_cam.inverse();

  // Bottom-corner rays of the two frustums, intersected edge-with-edge.
  const BevRay l_left =
      bev_pixel_ray(cam_l, cam_to_lidar, prop.left.box.x_min,
                    prop.left.box.y_max);
  const BevRay r_left =
      bev_pixel_ray(cam_r, cam_to_lidar, prop.right.box.x_min,
                    prop.right.box.y_max);
  const BevRay l_right =
      bev_pixel_ray(cam_l, cam_to_lidar, prop.left.box.x_max,
                    prop.left.box.y_max);
  const BevRay r_right =
      bev_pixel_ray(cam_r, cam_to_lidar, prop.right.box.x_max,
                    prop.right.box.y_max);

  const auto hit_left = intersect_rays(l_left, r_left);
  const auto hit_right = intersect_rays(l_right, r_right);
  if (!hit_left || !hit_right) return std::nullopt;

  const Vec2 center_bev = 0.5 * (*hit_left + *hit_right);

  // Yaw: dominant BEV spread of the points inside the depth band spanned
  // by the two intersections; all points when the band is empty.
  const double band_lo = std::min(hit_left->x(), hit_right->x());
  const double band_hi = std::max(hit_left->x(), hit_right->x());
  double min_x = 0, max_x = 0, min_y = 0, max_y = 0;
  bool any = false;
  for (const Point3& p : prop.points) {
    if (p.x < band_lo || p.x > band_hi) continue;
    if (!any) {
      min_x = max_x = p.x;
      min_y = max_y = p.y;
      any = true;
    } else {
      min_x = std::min(min_x, p.x);
      max_x = std::max(max_x, p.x);
      min_y = std::min(min_y, p.y);
      max_y = std::max(max_y, p.y);
    }
  }
  if (!any) {
    for (const Point3& p : prop.points) {
      if (!any) {
        min_x = max_x = p.x;
        min_y = max_y = p.y;
        any = true;
      } else {
        min_x = std::min(min_x, p.x);
        max_x = std::max(max_x, p.x);
        min_y = std::min(min_y, p.y);
        max_y = std::max(max_y, p.y);
      }
    }
  }
  if (!any) return std::nullopt;  // empty proposal
  const double yaw = (max_x - min_x) > (max_y - min_y) ? 0.0 : M_PI / 2.0;

  // Vertical center: mean height of the points inside the anchor footprint
  // placed at the estimated center; all proposal points as fallback.
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  double z_acc = 0.0;
  int z_count = 0;
  for (const Point3& p : prop.points) {
    const double dx = p.x - center_bev.x();
    const double dy = p.y - center_bev.y();
    const double along = c * dx + s * dy;
    const double across = -s * dx + c * dy;
    if (std::abs(along) <= 0.5 * anchor.length &&
        std::abs(across) <= 0.5 * anchor.width) {
      z_acc += p.z;
      ++z_count;
    }
  }
  if (z_count == 0) {
    for (const Point3& p : prop.points) z_acc += p.z;
    z_count = static_cast<int>(prop.points.size());
  }
  const double z_center = z_acc / z_count;

  Box3D box;
  box.center = Eigen::Vector3d(center_bev.x(), center_bev.y(), z_center);
  box.length = anchor.length;
  box.height = anchor.height;
  box.width = anchor.width;
  box.yaw = yaw;
  return box;
}

double recovery_score(double score_rgb, double iou_left, double iou_right) {
  return score_rgb * iou_left * iou_right;
}

std::optional<RecoveredPair> validate_and_score(const Box3D& box,
                                                const Detection2D& left,
                                                const Detection2D& right,
                                                const CalibrationFrame& calib,
                                                double tau_r,
                                                double eps_depth) {
  check_stereo_sides(left, right);
  const int pair = left.view.pair;
  const CameraModel& cam_l = pair_view(calib, pair, CameraSide::Left);
  const CameraModel& cam_r = pair_view(calib, pair, CameraSide::Right);

  const auto proj_l = project_box3d(box, calib.lidar_to_cam, cam_l, eps_depth);
  const auto proj_r = project_box3d(box, calib.lidar_to_cam, cam_r, eps_depth);
  if (!proj_l && !proj_r) return std::nullopt;

  const double iou_l = proj_l ? iou_axis_aligned(*proj_l, left.box) : 0.0;
  const double iou_r = proj_r ? iou_axis_aligned(*proj_r, right.box) : 0.0;
  if (!(std::max(iou_l, iou_r) > tau_r)) return std::nullopt;

  const bool left_wins = left.score >= right.score;
  RecoveredPair out;
  out.box = box;
  out.label3d = left_wins ? left.label : right.label;
  out.score3d = recovery_score(left_wins ? left.score : right.score, iou_l, iou_r);
  out.left = left;
  out.right = right;
  out.iou_left = iou_l;
  out.iou_right = iou_r;
  return out;
}

std::vector<RecoveredPair> recover_detections(
    const std::map<ViewId, std::vector<Detection2D>>& unmatched,
    const std::vector<Point3>& cloud, const CalibrationFrame& calib,
    const FusionConfig& cfg, const FrustumLocalizer& localizer) {
  std::vector<RecoveredPair> out;
  for (int pair = 0; pair < static_cast<int>(calib.pairs.size()); ++pair) {
    const auto left_it = unmatched.find({pair, CameraSide::Left});
    const auto right_it = unmatched.find({pair, CameraSide::Right});
    if (left_it == unmatched.end() || right_it == unmatched.end()) continue;
    if (left_it->second.empty() || right_it->second.empty()) continue;

    const Eigen::Matrix3d F = fundamental_from_projections(
        calib.view(pair, CameraSide::Left),
        calib.view(pair, CameraSide::Right));
    const auto pairs =
        match_stereo(left_it->second, right_it->second, F, cfg.d_max,
                     cfg.stereo_class_gating);

    for (const auto& [left, right] : pairs) {
      FrustumProposal prop = crop_frustum_intersection(
          cloud, left, right, calib, cfg.enlargement, cfg.eps_depth);
      if (static_cast<int>(prop.points.size()) <= cfg.p_min) continue;

      const std::string hint =
          left.score >= right.score ? left.label : right.label;
      const auto localized = localizer(prop, hint);
      if (!localized) continue;

      auto accepted = validate_and_score(localized->box, left, right, calib,
                                         cfg.tau_r, cfg.eps_depth);
      if (accepted) out.push_back(std::move(*accepted));
    }
  }
  return out;
}

FrustumLocalizer make_geometric_localizer(
    std::map<std::string, AnchorDims> anchors, CalibrationFrame calib) {
  return [anchors = std::move(anchors), calib = std::move(calib)](
             const FrustumProposal& prop,
             const std::string& hint) -> std::optional<LocalizerResult> {
    const auto box = localize_geometric_baseline(prop, hint, anchors, calib);
    if (!box) return std::nullopt;
    return LocalizerResult{*box, std::nullopt};
  };
}

FrustumLocalizer make_external_localizer(std::filesystem::path exchange_dir,
                                         double timeout_s) {
  // Process-wide ids keep record names unique when several frame workers
  // share one exchange directory.
  static std::atomic<std::uint64_t> counter{0};
  return [dir = std::move(exchange_dir), timeout_s](
             const FrustumProposal& prop,
             const std::string& hint) -> std::optional<LocalizerResult> {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const std::uint64_t id = counter.fetch_add(1);
    const fs::path record = dir / ("proposal_" + std::to_string(id) + ".rec");
    const fs::path staging = record.string() + ".tmp";
    const fs::path reply = record.string() + ".result";

    {
      std::ofstream out(staging, std::ios::binary);
      if (!out) {
        throw DataError("external localizer: cannot write " +
                        staging.string());
      }
      out << "frustum-proposal 1\n";
      out << "class " << hint << "\n";
      char line[160];
      std::snprintf(line, sizeof(line), "box_left %.6f %.6f %.6f %.6f\n",
                    prop.left.box.x_min, prop.left.box.y_min,
                    prop.left.box.x_max, prop.left.box.y_max);
      out << line;
      std::snprintf(line, sizeof(line), "box_right %.6f %.6f %.6f %.6f\n",
                    prop.right.box.x_min, prop.right.box.y_min,
                    prop.right.box.x_max, prop.right.box.y_max);
      out << line;
      out << "points " << prop.points.size() << "\n";
      for (const Point3& p : prop.points) {
        const float values[4] = {static_cast<float>(p.x),
                                 static_cast<float>(p.y),
                                 static_cast<float>(p.z),
                                 static_cast<float>(p.r)};
        out.write(reinterpret_cast<const char*>(values), sizeof(values));
      }
    }
    fs::rename(staging, record);

    const auto deadline = std::chrono::steady_clock::now() +
                          std::chrono::duration<double>(timeout_s);
    while (!fs::exists(reply)) {
      if (std::chrono::steady_clock::now() >= deadline) {
        std::error_code ec;
        fs::remove(record, ec);
        std::cerr << "external localizer: timeout waiting for "
                  << reply.string() << "\n";
        return std::nullopt;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }

    std::ifstream in(reply);
    std::string line;
    std::getline(in, line);
    in.close();
    std::error_code ec;
    fs::remove(record, ec);
    fs::remove(reply, ec);

    std::istringstream fields(line);
    double x, y, z, l, h, w, yaw;
    if (!(fields >> x >> y >> z >> l >> h >> w >> yaw)) {
      std::cerr << "external localizer: malformed reply \"" << line << "\"\n";
      return std::nullopt;
    }
    LocalizerResult result;
    result.box.center = Eigen::Vector3d(x, y, z);
    result.box.length = l;
    result.box.height = h;
    result.box.width = w;
    result.box.yaw = wrap_angle(yaw);
    double score;
    if (fields >> score) result.native_score = score;
    if (!(result.box.length > 0 && result.box.height > 0 &&
          result.box.width > 0)) {
      std::cerr << "external localizer: non-positive dimensions rejected\n";
      return std::nullopt;
    }
    return result;
  };
}

}  // namespace lcf
