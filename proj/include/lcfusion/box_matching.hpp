#pragma once

#include <map>
#include <vector>

#include "lcfusion/detections.hpp"

namespace lcf {

/// One accepted LiDAR/RGB association in a single view.
struct Match2D3D {
  int det3d_id = -1;
  Detection2D det2d;
  double iou = 0.0;  // projection IoU, >= tau_b
};

/// Output of the matching stage: per-view accepted matches, per-view
/// leftover RGB detections, and the LiDAR detections that matched in at
/// least one view.
struct MatchSet {
  std::map<ViewId, std::vector<Match2D3D>> matched;
  std::map<ViewId, std::vector<Detection2D>> unmatched_rgb;
  std::vector<Detection3D> surviving;
};

/// Drops detections scoring below score_thr, then applies bev_nms.
std::vector<Detection3D> preprocess_lidar(const std::vector<Detection3D>& dets,
                                          double score_thr, double nms_iou);

/// Greedy score-descending suppression by rotated BEV IoU; a detection is
/// suppressed when its IoU with an already kept one exceeds iou_thr. Ties
/// in score break toward the lower id. Survivors are returned in that
/// order.
std::vector<Detection3D> bev_nms(const std::vector<Detection3D>& dets,
                                 double iou_thr);

/// Projects every LiDAR detection into every view, solves the per-view
/// assignment maximizing projection IoU against the RGB boxes, demotes
/// pairs under tau_b, and prunes LiDAR detections that matched nowhere.
/// RGB detections must already be filtered at the RGB score threshold.
/// Throws ConfigError when a detection references a view the calibration
/// does not declare.
MatchSet match_boxes(const std::vector<Detection3D>& lidar,
                     const std::vector<Detection2D>& rgb,
                     const CalibrationFrame& calib, double tau_b,
                     double eps_depth = kDefaultEpsDepth);

}  // namespace lcf
