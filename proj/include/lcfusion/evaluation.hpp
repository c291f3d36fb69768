#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "lcfusion/detections.hpp"

namespace lcf {

enum class Difficulty { Easy = 0, Moderate = 1, Hard = 2, Ignored = 3 };

enum class IouMetric { Bev, Iou3D };

enum class ApInterpolation { R40, R11 };

/// Tier cutoffs indexed by Easy/Moderate/Hard. Defaults follow the public
/// KITTI protocol.
struct DifficultyThresholds {
  std::array<double, 3> min_height{40.0, 25.0, 25.0};   // 2D box height, px
  std::array<int, 3> max_occlusion{0, 1, 2};
  std::array<double, 3> max_truncation{0.15, 0.30, 0.50};
};

/// Easiest tier whose height/occlusion/truncation cutoffs the annotation
/// satisfies; Ignored when it fails all three.
Difficulty assign_difficulty(const GtAnnotation& gt,
                             const DifficultyThresholds& thr = {});

const char* difficulty_name(Difficulty d);

/// Intersection over union of the two boxes' rotated footprints on the
/// ground plane (convex polygon clipping).
double rotated_bev_iou(const Box3D& a, const Box3D& b);

/// Volumetric IoU: footprint intersection area times vertical overlap,
/// over the union of volumes.
double iou_3d(const Box3D& a, const Box3D& b);

/// One precision/recall sample of the detection staircase, taken after each
/// counted (non-ignored) detection in descending score order.
struct PrPoint {
  double score = 0.0;
  double recall = 0.0;
  double precision = 0.0;
};

struct ApResult {
  /// Absent when the class/difficulty has no ground truth.
  std::optional<double> ap;
  std::vector<PrPoint> curve;
};

/// Average precision over per-frame detections and annotations.
///
/// Detections are matched greedily in descending score order to the
/// unmatched same-class ground truth with the highest IoU at or above
/// iou_thr. Ground truths of a harder tier than requested (or Ignored) can
/// absorb a detection without producing a true or false positive. AP is the
/// mean of interpolated precision over 40 (or 11) equally spaced recall
/// points.
ApResult compute_ap(const std::vector<std::vector<Detection3D>>& dets,
                    const std::vector<std::vector<GtAnnotation>>& gts,
                    const std::string& label, Difficulty difficulty,
                    double iou_thr, IouMetric metric,
                    ApInterpolation interp = ApInterpolation::R40,
                    const DifficultyThresholds& thr = {});

struct EvalEntry {
  std::string label;
  Difficulty difficulty = Difficulty::Easy;
  IouMetric metric = IouMetric::Iou3D;
  ApResult result;
};

struct EvalReport {
  std::vector<EvalEntry> entries;
};

/// Full class x difficulty x metric sweep. iou_thresholds aligns with
/// labels.
EvalReport evaluate_detections(
    const std::vector<std::vector<Detection3D>>& dets,
    const std::vector<std::vector<GtAnnotation>>& gts,
    const std::vector<std::string>& labels,
    const std::vector<double>& iou_thresholds,
    ApInterpolation interp = ApInterpolation::R40,
    const DifficultyThresholds& thr = {});

/// Human-readable delimited table, one row per class and metric.
std::string eval_report_table(const EvalReport& report);

/// Machine-readable JSON rendering of the report.
std::string eval_report_json(const EvalReport& report);

}  // namespace lcf
