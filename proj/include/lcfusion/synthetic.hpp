#pragma once

#include <array>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "lcfusion/config.hpp"
#include "lcfusion/detections.hpp"
#include "lcfusion/geometry.hpp"
#include "lcfusion/kitti_io.hpp"

namespace lcf {

/// Knobs for the synthetic scene generator. Defaults model a KITTI-like
/// forward-facing rig: x ahead, y left, z up, ground plane at z = ground_z.
struct SceneConfig {
  // Placement region for object centres (LiDAR frame, metres).
  double x_min = 8.0;
  double x_max = 40.0;
  double y_extent = 10.0;
  double ground_z = -1.73;
  /// Yaw drawn uniformly from [-yaw_max, yaw_max].
  double yaw_max = 3.14159265358979323846;
  /// Minimum BEV clearance between object bounding circles.
  double min_gap = 1.0;
  /// Minimum pairwise |Δx| between object centres (0 disables).
  double min_x_separation = 0.0;
  /// Minimum pixel gap between projected corner boxes in every view
  /// (0 disables). Implies disjoint ground-truth 2D boxes.
  double min_gap_2d_px = 0.0;
  /// Lateral keep-out band: if lo < hi, no object may overlap
  /// y ∈ (keepout_y_lo, keepout_y_hi).
  double keepout_y_lo = 0.0;
  double keepout_y_hi = 0.0;
  int max_placement_retries = 500;

  // Surface sampling. Density falls off with squared range.
  double points_per_m2_at_10m = 60.0;
  int min_points_per_object = 30;
  int max_points_per_object = 4000;
  int ground_points = 2000;

  // Object classes and base dimensions; dims get a relative uniform
  // jitter of ±dim_jitter.
  std::vector<std::string> classes = {"Car", "Pedestrian", "Cyclist"};
  std::vector<double> class_weights = {0.5, 0.25, 0.25};
  std::map<std::string, AnchorDims> dims = {
      {"Car", {3.9, 1.56, 1.6}},
      {"Pedestrian", {0.8, 1.73, 0.6}},
      {"Cyclist", {1.76, 1.73, 0.6}},
  };
  double dim_jitter = 0.1;

  // Stereo rig. The left camera sits at the LiDAR origin looking along +x;
  // the right camera is `baseline` metres to its right. A nonzero
  // right_cam_yaw pans the right camera about its vertical axis, which
  // makes the pair non-rectified.
  double focal = 721.5377;
  double cx = 609.5593;
  double cy = 172.854;
  double baseline = 0.54;
  double right_cam_yaw = 0.0;
  int image_width = 1242;
  int image_height = 375;
};

/// A generated scene: ground-truth boxes, a surface-sampled cloud, the
/// stereo calibration and exact per-view 2D boxes (pixel AABB of each
/// object's projected points).
struct SyntheticScene {
  std::vector<Detection3D> gt;  ///< score 1, id = object index
  std::vector<Point3> cloud;
  /// Half-open [begin, end) index range of each object's points in `cloud`.
  std::vector<std::pair<int, int>> object_point_ranges;
  KittiCalib raw_calib;
  CalibrationFrame calib;
  std::vector<Detection2D> gt_left;   ///< aligned with gt
  std::vector<Detection2D> gt_right;  ///< aligned with gt
  SceneConfig cfg;                    ///< config the scene was built from
};

/// Detector degradation model applied on top of a scene's ground truth.
struct DegradationSpec {
  double lidar_dropout = 0.0;
  std::map<std::string, double> class_dropout;  ///< per-class overrides
  double center_noise = 0.0;  ///< stddev, metres, per axis
  double dim_noise = 0.0;     ///< relative stddev
  double yaw_noise = 0.0;     ///< stddev, radians
  /// Per-object Bernoulli rate of spurious LiDAR boxes; injected boxes are
  /// kept at least fp_min_distance (BEV) from every ground-truth box and
  /// their image projections never touch a ground-truth 2D box.
  double fp_rate = 0.0;
  double fp_min_distance = 5.0;
  double rgb_fp_rate = 0.0;  ///< per-object, per-view spurious 2D boxes
  double box_jitter_px = 0.0;
  double rgb_dropout = 0.0;  ///< per-view, independent
  double lidar_score_min = 1.0;
  double lidar_score_max = 1.0;
  double rgb_score_min = 1.0;
  double rgb_score_max = 1.0;
};

/// Simulated detector outputs for one scene.
struct SimulatedDetections {
  std::vector<Detection3D> lidar;
  std::vector<Detection2D> rgb;       ///< both views, flat
  std::vector<int> injected_fp_ids;   ///< ids of spurious LiDAR boxes
  std::vector<int> dropped_gt;        ///< GT indices absent from `lidar`
};

/// Builds the raw calibration rows and camera models for a SceneConfig rig.
std::pair<KittiCalib, CalibrationFrame> make_stereo_rig(const SceneConfig& cfg);

/// Places n_objects non-overlapping boxes in front of both cameras, samples
/// their surfaces plus ground clutter, and derives exact 2D ground truth.
/// Deterministic in (seed, n_objects, cfg).
/// Throws ConfigError on an unusable config and DataError when placement
/// fails after the configured retries.
SyntheticScene generate_scene(std::uint64_t seed, int n_objects,
                              const SceneConfig& cfg = {});

/// Throws ConfigError unless all probabilities lie in [0,1], noise scales
/// are non-negative and score ranges are ordered within [0,1].
void validate_degradation(const DegradationSpec& spec);

/// Parses a DegradationSpec from JSON text; unknown keys are rejected.
DegradationSpec parse_degradation_spec(const std::string& text);

/// Reads and parses a DegradationSpec from a JSON file.
DegradationSpec load_degradation_spec(const std::string& path);

/// Applies dropout, noise and false-positive injection to the scene's
/// ground truth. LiDAR detections keep id = GT index; injected boxes get
/// fresh ids starting at the GT count. Deterministic in (scene, spec, seed).
SimulatedDetections simulate_detectors(const SyntheticScene& scene,
                                       const DegradationSpec& spec,
                                       std::uint64_t seed);

/// Ground-truth rows (KITTI label semantics: zero truncation/occlusion,
/// left-view 2D boxes) for export through write_labels.
std::vector<GtAnnotation> scene_annotations(const SyntheticScene& scene);

}  // namespace lcf
