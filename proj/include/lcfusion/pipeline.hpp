#pragma once

#include <vector>

#include "lcfusion/box_matching.hpp"
#include "lcfusion/config.hpp"
#include "lcfusion/detection_recovery.hpp"
#include "lcfusion/kitti_io.hpp"
#include "lcfusion/semantic_fusion.hpp"

namespace lcf {

/// Output of the full cascade on one frame, with the intermediate stage
/// results kept for inspection.
struct FusionOutcome {
  std::vector<Detection3D> fused;  ///< final detections, ids 0..n-1
  MatchSet matches;                ///< after pruning/matching
  std::vector<RecoveredPair> recovered;
};

/// Instantiates the localizer named by cfg.localizer ("geometric" or
/// "external:<dir>") bound to this frame's calibration.
FrustumLocalizer make_localizer(const FusionConfig& cfg,
                                const CalibrationFrame& calib);

/// Runs the cascade: score filtering and BEV NMS on the LiDAR set, 2D/3D
/// matching with false-positive pruning, stereo recovery of unmatched RGB
/// pairs, semantic fusion, and a final dedup NMS. Pass a localizer to
/// override the one cfg selects.
FusionOutcome fuse_frame(const std::vector<Detection3D>& lidar,
                         const std::vector<Detection2D>& rgb,
                         const std::vector<Point3>& cloud,
                         const CalibrationFrame& calib,
                         const FusionConfig& cfg,
                         const FrustumLocalizer* localizer = nullptr);

/// Convenience overload over a loaded frame bundle.
FusionOutcome fuse_frame(const FrameBundle& bundle, const FusionConfig& cfg,
                         const FrustumLocalizer* localizer = nullptr);

}  // namespace lcf
