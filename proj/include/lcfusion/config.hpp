#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "lcfusion/evaluation.hpp"

namespace lcf {

struct AnchorDims {
  double length = 0.0;
  double height = 0.0;
  double width = 0.0;
};

enum class PriorMode { Uniform, Frequency };

enum class UnknownClassPolicy { Skip, Error };

/// Every threshold and policy of the pipeline, with working defaults.
/// load_config overrides fields from a JSON file; validate_config enforces
/// the value ranges.
struct FusionConfig {
  // matching
  double tau_b = 0.5;              // min projection IoU to keep a match
  double lidar_score_thr = 0.3;    // LiDAR confidence floor
  double lidar_nms_iou = 0.3;      // BEV NMS suppression threshold
  double rgb_score_thr = 0.5;      // RGB confidence floor

  // recovery
  double tau_r = 0.25;             // geometric consistency gate
  double enlargement = 0.05;       // frustum box enlargement fraction
  int p_min = 5;                   // proposals need more points than this
  double d_max = 50.0;             // epipolar cost gate, px
  bool stereo_class_gating = false;
  std::string localizer = "geometric";  // or "external:<dir>"
  double external_timeout_s = 10.0;

  // fusion
  PriorMode prior_mode = PriorMode::Uniform;
  std::map<std::string, double> class_priors;  // used with Frequency

  // classes
  std::vector<std::string> classes{"Car", "Pedestrian", "Cyclist"};
  std::map<std::string, AnchorDims> anchors{
      {"Car", {3.9, 1.56, 1.6}},
      {"Pedestrian", {0.8, 1.73, 0.6}},
      {"Cyclist", {1.76, 1.73, 0.6}},
  };
  UnknownClassPolicy unknown_class = UnknownClassPolicy::Skip;

  // eval
  ApInterpolation ap_interp = ApInterpolation::R40;
  std::map<std::string, double> eval_iou_thresholds{
      {"Car", 0.7}, {"Pedestrian", 0.5}, {"Cyclist", 0.5}};
  DifficultyThresholds difficulty;

  // io
  int image_width = 1242;
  int image_height = 375;
  double eps_depth = 1e-6;

  bool has_class(const std::string& label) const;
  const AnchorDims& anchor_for(const std::string& label) const;
  /// Per-class eval thresholds aligned with `classes`.
  std::vector<double> iou_threshold_list() const;
};

/// Throws ConfigError on any out-of-range or inconsistent field.
void validate_config(const FusionConfig& cfg);

/// Parses a JSON config file over the defaults. Unknown keys anywhere in
/// the document are rejected. The result is validated.
FusionConfig load_config(const std::filesystem::path& path);

/// Same, from an in-memory JSON string.
FusionConfig parse_config(const std::string& text);

}  // namespace lcf
