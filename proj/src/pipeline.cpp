#include "lcfusion/pipeline.hpp"

#include <algorithm>
#include <cstring>
#include <string>

#include "lcfusion/errors.hpp"

namespace lcf {
namespace {

template <typename Det>
std::vector<Det> drop_unknown_classes(const std::vector<Det>& dets,
                                      const FusionConfig& cfg) {
  std::vector<Det> kept;
  kept.reserve(dets.size());
  for (const auto& det : dets) {
    if (cfg.has_class(det.label)) {
      kept.push_back(det);
    } else if (cfg.unknown_class == UnknownClassPolicy::Error) {
      throw DataError("fuse_frame: unknown class '" + det.label + "'");
    }
  }
  return kept;
}

}  // namespace

FrustumLocalizer make_localizer(const FusionConfig& cfg,
                                const CalibrationFrame& calib) {
  if (cfg.localizer == "geometric")
    return make_geometric_localizer(cfg.anchors, calib);
  constexpr const char* kPrefix = "external:";
  if (cfg.localizer.rfind(kPrefix, 0) == 0)
    return make_external_localizer(cfg.localizer.substr(std::strlen(kPrefix)),
                                   cfg.external_timeout_s);
  throw ConfigError("unknown localizer '" + cfg.localizer + "'");
}

FusionOutcome fuse_frame(const std::vector<Detection3D>& lidar,
                         const std::vector<Detection2D>& rgb,
                         const std::vector<Point3>& cloud,
                         const CalibrationFrame& calib,
                         const FusionConfig& cfg,
                         const FrustumLocalizer* localizer) {
  FusionOutcome out;

  std::vector<Detection2D> rgb_kept;
  for (const auto& det : drop_unknown_classes(rgb, cfg))
    if (det.score >= cfg.rgb_score_thr) rgb_kept.push_back(det);

  const std::vector<Detection3D> lidar_kept = preprocess_lidar(
      drop_unknown_classes(lidar, cfg), cfg.lidar_score_thr, cfg.lidar_nms_iou);

  out.matches = match_boxes(lidar_kept, rgb_kept, calib, cfg.tau_b, cfg.eps_depth);

  FrustumLocalizer own;
  if (!localizer) {
    own = make_localizer(cfg, calib);
    localizer = &own;
  }
  out.recovered = recover_detections(out.matches.unmatched_rgb, cloud, calib,
                                     cfg, *localizer);

  std::vector<Detection3D> merged;
  for (const auto& det : fuse_semantics(out.matches, out.recovered, cfg))
    merged.push_back({det.box, det.score, det.label,
                      static_cast<int>(merged.size())});

  out.fused = bev_nms(merged, cfg.lidar_nms_iou);
  for (std::size_t i = 0; i < out.fused.size(); ++i)
    out.fused[i].id = static_cast<int>(i);
  return out;
}

FusionOutcome fuse_frame(const FrameBundle& bundle, const FusionConfig& cfg,
                         const FrustumLocalizer* localizer) {
  return fuse_frame(bundle.lidar, bundle.rgb, bundle.cloud, bundle.calib, cfg,
                    localizer);
}

}  // namespace lcf
