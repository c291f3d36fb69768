#include "lcfusion/box_matching.hpp"

#include <algorithm>
#include <optional>
#include <set>

#include "lcfusion/assignment.hpp"
#include "lcfusion/errors.hpp"
#include "lcfusion/evaluation.hpp"

namespace lcf {
namespace {

bool score_id_before(const Detection3D& a, const Detection3D& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.id < b.id;
}

// Total order making per-view matching independent of input order.
bool canonical_2d_before(const Detection2D& a, const Detection2D& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.box.x_min != b.box.x_min) return a.box.x_min < b.box.x_min;
  if (a.box.y_min != b.box.y_min) return a.box.y_min < b.box.y_min;
  if (a.box.x_max != b.box.x_max) return a.box.x_max < b.box.x_max;
  if (a.box.y_max != b.box.y_max) return a.box.y_max < b.box.y_max;
  return a.label < b.label;
}

std::optional<Box2D> project_box(const Box3D& box,
                                 const Eigen::Matrix4d& lidar_to_cam,
                                 const CameraModel& cam, double eps_depth) {
  const auto corners = box3d_corners(box);
  const auto cam_pts = transform_points(corners, lidar_to_cam);
  const auto projections = project_points(cam_pts, cam, eps_depth);
  return enclosing_aabb(projections);
}

}  // namespace

std::vector<Detection3D> bev_nms(const std::vector<Detection3D>& dets,
                                 double iou_thr) {
  std::vector<Detection3D> sorted = dets;
  std::sort(sorted.begin(), sorted.end(), score_id_before);

  std::vector<Detection3D> kept;
  for (const Detection3D& det : sorted) {
    bool suppressed = false;
    for (const Detection3D& k : kept) {
      if (rotated_bev_iou(det.box, k.box) > iou_thr) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) kept.push_back(det);
  }
  return kept;
}

std::vector<Detection3D> preprocess_lidar(const std::vector<Detection3D>& dets,
                                          double score_thr, double nms_iou) {
  std::vector<Detection3D> filtered;
  filtered.reserve(dets.size());
  for (const Detection3D& det : dets) {
    if (det.score >= score_thr) filtered.push_back(det);
  }
  return bev_nms(filtered, nms_iou);
}

MatchSet match_boxes(const std::vector<Detection3D>& lidar,
                     const std::vector<Detection2D>& rgb,
                     const CalibrationFrame& calib, double tau_b,
                     double eps_depth) {
  std::map<ViewId, std::vector<Detection2D>> by_view;
  for (const Detection2D& det : rgb) {
    if (det.view.pair < 0 ||
        det.view.pair >= static_cast<int>(calib.pairs.size())) {
      throw ConfigError("match_boxes: detection references stereo pair " +
                        std::to_string(det.view.pair) +
                        " absent from the calibration");
    }
    by_view[det.view].push_back(det);
  }
  for (auto& [view, dets] : by_view) {
    std::sort(dets.begin(), dets.end(), canonical_2d_before);
  }

  std::vector<Detection3D> lidar_sorted = lidar;
  std::sort(lidar_sorted.begin(), lidar_sorted.end(),
            [](const Detection3D& a, const Detection3D& b) {
              return a.id < b.id;
            });

  MatchSet out;
  std::set<int> matched_ids;
  for (const auto& [view, dets2d] : by_view) {
    const CameraModel& cam = calib.view(view.pair, view.side);

    // Rows: LiDAR detections with a projection in this view.
    std::vector<std::size_t> rows;
    std::vector<Box2D> proj_boxes;
    for (std::size_t i = 0; i < lidar_sorted.size(); ++i) {
      const auto proj =
          project_box(lidar_sorted[i].box, calib.lidar_to_cam, cam, eps_depth);
      if (!proj) continue;
      rows.push_back(i);
      proj_boxes.push_back(*proj);
    }

    Eigen::MatrixXd iou(static_cast<Eigen::Index>(rows.size()),
                        static_cast<Eigen::Index>(dets2d.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      for (std::size_t c = 0; c < dets2d.size(); ++c) {
        iou(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
            iou_axis_aligned(proj_boxes[r], dets2d[c].box);
      }
    }

    const AssignmentResult assignment =
        solve_assignment(iou, AssignSense::Maximize);

    std::vector<bool> rgb_taken(dets2d.size(), false);
    auto& matches = out.matched[view];
    for (const auto& [r, c] : assignment.pairs) {
      const double pair_iou =
          iou(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
      if (pair_iou < tau_b) continue;  // demoted: RGB stays unmatched
      Match2D3D match;
      match.det3d_id = lidar_sorted[rows[static_cast<std::size_t>(r)]].id;
      match.det2d = dets2d[static_cast<std::size_t>(c)];
      match.iou = pair_iou;
      matches.push_back(match);
      matched_ids.insert(match.det3d_id);
      rgb_taken[static_cast<std::size_t>(c)] = true;
    }

    auto& leftovers = out.unmatched_rgb[view];
    for (std::size_t c = 0; c < dets2d.size(); ++c) {
      if (!rgb_taken[c]) leftovers.push_back(dets2d[c]);
    }
  }

  for (const Detection3D& det : lidar_sorted) {
    if (matched_ids.count(det.id)) out.surviving.push_back(det);
  }
  return out;
}

}  // namespace lcf
