#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "lcfusion/config.hpp"
#include "lcfusion/detections.hpp"

namespace lcf {

/// Points inside the intersection of the two back-projected (enlarged)
/// boxes of one stereo detection pair, plus the pair itself.
struct FrustumProposal {
  std::vector<Point3> points;  // LiDAR frame
  Detection2D left;            // source detections, unenlarged boxes
  Detection2D right;
  double enlargement = 0.0;
};

/// A 3D detection reconstructed from an unmatched stereo pair.
struct RecoveredPair {
  Box3D box;
  double score3d = 0.0;  // down-weighted confidence s_RGB * IoU_l * IoU_r
  std::string label3d;   // label of the more confident 2D detection
  Detection2D left;
  Detection2D right;
  double iou_left = 0.0;  // re-projection IoU per side
  double iou_right = 0.0;
};

/// Pluggable 3D localizer: consumes a proposal and a class hint, returns a
/// box (plus an optional native confidence, unused by the built-in scoring)
/// or nothing when localization fails.
struct LocalizerResult {
  Box3D box;
  std::optional<double> native_score;
};
using FrustumLocalizer = std::function<std::optional<LocalizerResult>(
    const FrustumProposal&, const std::string& class_hint)>;

/// Scales width and height by (1 + e) about the fixed center, then clamps
/// to [0, width-1] x [0, height-1].
Box2D enlarge_box(const Box2D& box, double e, int image_width,
                  int image_height);

/// Pairs leftover detections of the two sides of one stereo pair by
/// minimizing the summed epipolar corner distance; pairs costlier than
/// d_max are discarded after solving. With class_gating, differing labels
/// are forbidden.
std::vector<std::pair<Detection2D, Detection2D>> match_stereo(
    const std::vector<Detection2D>& left,
    const std::vector<Detection2D>& right, const Eigen::Matrix3d& F,
    double d_max, bool class_gating = false);

/// Retains exactly the cloud points with positive depth in both views of
/// the pair whose projections fall inside both enlarged boxes (inclusive
/// bounds).
FrustumProposal crop_frustum_intersection(const std::vector<Point3>& cloud,
                                          const Detection2D& left,
                                          const Detection2D& right,
                                          const CalibrationFrame& calib,
                                          double enlargement,
                                          double eps_depth = kDefaultEpsDepth);

/// Anchor-dimension localizer: BEV center from the two ground-plane
/// intersections of corresponding lateral boundary rays of the two
/// frustums, yaw from the dominant BEV spread of the proposal points in
/// the intersections' depth band, vertical center from the mean point
/// height inside the anchor footprint. Returns nothing when the boundary
/// rays fail to intersect in front of the cameras.
std::optional<Box3D> localize_geometric_baseline(
    const FrustumProposal& prop, const std::string& label,
    const std::map<std::string, AnchorDims>& anchors,
    const CalibrationFrame& calib);

/// Confidence down-weighting for a recovered detection: the source RGB
/// score attenuated by both re-projection IoUs.
double recovery_score(double score_rgb, double iou_left, double iou_right);

/// Re-projects the localized box into both views and accepts it when
/// max(IoU_l, IoU_r) > tau_r, scoring it s_RGB * IoU_l * IoU_r with the
/// label and score of the more confident source detection.
std::optional<RecoveredPair> validate_and_score(
    const Box3D& box, const Detection2D& left, const Detection2D& right,
    const CalibrationFrame& calib, double tau_r,
    double eps_depth = kDefaultEpsDepth);

/// Full recovery pass over the per-view leftover sets: stereo pairing,
/// frustum cropping (proposals with at most cfg.p_min points are skipped),
/// localization, validation and scoring.
std::vector<RecoveredPair> recover_detections(
    const std::map<ViewId, std::vector<Detection2D>>& unmatched,
    const std::vector<Point3>& cloud, const CalibrationFrame& calib,
    const FusionConfig& cfg, const FrustumLocalizer& localizer);

/// The built-in localizer bound to a calibration and anchor table.
FrustumLocalizer make_geometric_localizer(
    std::map<std::string, AnchorDims> anchors, CalibrationFrame calib);

/// Directory-exchange adapter for an out-of-process localizer: writes one
/// record file per proposal (text header with the boxes and class hint,
/// then the points in the binary cloud layout) and waits for
/// "<record>.result" holding one line "x y z l h w yaw [score]".
FrustumLocalizer make_external_localizer(std::filesystem::path exchange_dir,
                                         double timeout_s);

}  // namespace lcf
