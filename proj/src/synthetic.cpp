#include "lcfusion/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lcfusion/errors.hpp"
#include "lcfusion/rng.hpp"

namespace lcf {
namespace {

constexpr double kPi = 3.14159265358979323846;

void check_scene_config(const SceneConfig& cfg) {
  if (!(cfg.x_min > 0.0) || !(cfg.x_max > cfg.x_min))
    throw ConfigError("scene: need 0 < x_min < x_max");
  if (!(cfg.y_extent > 0.0)) throw ConfigError("scene: y_extent must be positive");
  if (cfg.yaw_max < 0.0) throw ConfigError("scene: yaw_max must be non-negative");
  if (cfg.classes.empty() || cfg.classes.size() != cfg.class_weights.size())
    throw ConfigError("scene: classes and class_weights must align and be non-empty");
  double wsum = 0.0;
  for (double w : cfg.class_weights) {
    if (w < 0.0) throw ConfigError("scene: class weights must be non-negative");
    wsum += w;
  }
  if (!(wsum > 0.0)) throw ConfigError("scene: class weights sum to zero");
  for (const auto& name : cfg.classes)
    if (!cfg.dims.count(name))
      throw ConfigError("scene: missing dims for class '" + name + "'");
  if (cfg.dim_jitter < 0.0 || cfg.dim_jitter >= 1.0)
    throw ConfigError("scene: dim_jitter must lie in [0,1)");
  if (cfg.image_width <= 1 || cfg.image_height <= 1)
    throw ConfigError("scene: image dimensions too small");
  if (!(cfg.focal > 0.0) || !(cfg.baseline > 0.0))
    throw ConfigError("scene: focal and baseline must be positive");
  if (!(cfg.points_per_m2_at_10m > 0.0))
    throw ConfigError("scene: point density must be positive");
  if (cfg.min_points_per_object < 1 ||
      cfg.max_points_per_object < cfg.min_points_per_object)
    throw ConfigError("scene: bad per-object point bounds");
  if (cfg.ground_points < 0) throw ConfigError("scene: ground_points < 0");
  if (cfg.max_placement_retries < 1)
    throw ConfigError("scene: max_placement_retries < 1");
}

std::vector<double> matrix_row_values(const Eigen::Matrix<double, 3, 4>& m) {
  std::vector<double> v;
  v.reserve(12);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 4; ++c) v.push_back(m(r, c));
  return v;
}

int pick_class(Rng& rng, const SceneConfig& cfg) {
  double total = 0.0;
  for (double w : cfg.class_weights) total += w;
  double u = rng.uniform(0.0, total);
  double acc = 0.0;
  for (std::size_t i = 0; i < cfg.class_weights.size(); ++i) {
    acc += cfg.class_weights[i];
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(cfg.class_weights.size()) - 1;
}

bool boxes_2d_apart(const Box2D& a, const Box2D& b, double gap) {
  return a.x_max + gap < b.x_min || b.x_max + gap < a.x_min ||
         a.y_max + gap < b.y_min || b.y_max + gap < a.y_min;
}

/// Projects all eight corners; returns the pixel AABB only when every
/// corner lands inside both images with positive depth.
std::optional<Box2D> corners_in_view(const CameraModel& cam,
                                     const std::array<Eigen::Vector3d, 8>& corners,
                                     const Eigen::Matrix4d& lidar_to_cam) {
  const std::vector<Eigen::Vector3d> pts =
      transform_points(std::vector<Eigen::Vector3d>(corners.begin(), corners.end()),
                       lidar_to_cam);
  const std::vector<Projection> projs = project_points(pts, cam);
  for (const auto& p : projs) {
    if (p.behind_camera) return std::nullopt;
    if (p.pixel.x() < 0.0 || p.pixel.x() > cam.image_width - 1.0 ||
        p.pixel.y() < 0.0 || p.pixel.y() > cam.image_height - 1.0)
      return std::nullopt;
  }
  return enclosing_aabb(projs);
}

/// Pixel AABB of whatever corners project in front of the camera.
std::optional<Box2D> loose_corner_aabb(const CameraModel& cam,
                                       const std::array<Eigen::Vector3d, 8>& corners,
                                       const Eigen::Matrix4d& lidar_to_cam) {
  const std::vector<Eigen::Vector3d> pts =
      transform_points(std::vector<Eigen::Vector3d>(corners.begin(), corners.end()),
                       lidar_to_cam);
  return enclosing_aabb(project_points(pts, cam));
}

struct FaceSpec {
  int axis;     // 0=x, 1=y, 2=z
  double sign;  // ±1
  double area;
};

void sample_box_surface(Rng& rng, const Box3D& box, int count,
                        std::vector<Point3>& out) {
  const double hl = box.length / 2.0, hw = box.width / 2.0, hh = box.height / 2.0;
  const std::array<FaceSpec, 6> faces = {{
      {0, +1.0, box.width * box.height},
      {0, -1.0, box.width * box.height},
      {1, +1.0, box.length * box.height},
      {1, -1.0, box.length * box.height},
      {2, +1.0, box.length * box.width},
      {2, -1.0, box.length * box.width},
  }};
  double total = 0.0;
  for (const auto& f : faces) total += f.area;
  const double cy = std::cos(box.yaw), sy = std::sin(box.yaw);
  for (int i = 0; i < count; ++i) {
    double u = rng.uniform(0.0, total);
    const FaceSpec* face = &faces.back();
    double acc = 0.0;
    for (const auto& f : faces) {
      acc += f.area;
      if (u < acc) {
        face = &f;
        break;
      }
    }
    Eigen::Vector3d local;
    const double a = rng.uniform(-1.0, 1.0), b = rng.uniform(-1.0, 1.0);
    switch (face->axis) {
      case 0:
        local = {face->sign * hl, a * hw, b * hh};
        break;
      case 1:
        local = {a * hl, face->sign * hw, b * hh};
        break;
      default:
        local = {a * hl, b * hw, face->sign * hh};
        break;
    }
    Point3 p;
    p.x = box.center.x() + cy * local.x() - sy * local.y();
    p.y = box.center.y() + sy * local.x() + cy * local.y();
    p.z = box.center.z() + local.z();
    p.r = static_cast<float>(rng.uniform(0.0, 1.0));
    out.push_back(p);
  }
}

Box2D exact_2d_box(const SyntheticScene& scene, int object, const CameraModel& cam) {
  const auto [begin, end] = scene.object_point_ranges[static_cast<std::size_t>(object)];
  std::vector<Projection> projs;
  projs.reserve(static_cast<std::size_t>(end - begin));
  const Eigen::Matrix4d& T = scene.calib.lidar_to_cam;
  for (int i = begin; i < end; ++i) {
    const Eigen::Vector4d h =
        T * scene.cloud[static_cast<std::size_t>(i)].xyz().homogeneous();
    projs.push_back(project_point(h.head<3>() / h.w(), cam));
  }
  auto box = enclosing_aabb(projs);
  if (!box) throw DataError("synthetic: object projects behind a camera");
  return *box;
}

double clamp(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

}  // namespace

std::pair<KittiCalib, CalibrationFrame> make_stereo_rig(const SceneConfig& cfg) {
  Eigen::Matrix3d k = Eigen::Matrix3d::Identity();
  k(0, 0) = k(1, 1) = cfg.focal;
  k(0, 2) = cfg.cx;
  k(1, 2) = cfg.cy;

  Eigen::Matrix<double, 3, 4> left = Eigen::Matrix<double, 3, 4>::Zero();
  left.leftCols<3>() = Eigen::Matrix3d::Identity();
  left = k * left;

  // Right camera centre sits `baseline` to the right of the left camera
  // (camera x axis); right_cam_yaw pans it about the vertical axis.
  Eigen::Matrix3d rot = Eigen::Matrix3d::Identity();
  if (cfg.right_cam_yaw != 0.0) {
    const double c = std::cos(cfg.right_cam_yaw), s = std::sin(cfg.right_cam_yaw);
    rot << c, 0.0, -s, 0.0, 1.0, 0.0, s, 0.0, c;
  }
  const Eigen::Vector3d centre(cfg.baseline, 0.0, 0.0);
  Eigen::Matrix<double, 3, 4> right;
  right.leftCols<3>() = rot;
  right.col(3) = -rot * centre;
  right = k * right;

  Eigen::Matrix<double, 3, 4> velo_to_cam;
  velo_to_cam << 0.0, -1.0, 0.0, 0.0,  //
      0.0, 0.0, -1.0, 0.0,             //
      1.0, 0.0, 0.0, 0.0;

  KittiCalib raw;
  raw.rows.push_back({"P0", matrix_row_values(left)});
  raw.rows.push_back({"P1", matrix_row_values(right)});
  raw.rows.push_back({"P2", matrix_row_values(left)});
  raw.rows.push_back({"P3", matrix_row_values(right)});
  raw.rows.push_back({"R0_rect",
                      {1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0}});
  raw.rows.push_back({"Tr_velo_to_cam", matrix_row_values(velo_to_cam)});

  CalibrationFrame frame =
      to_calibration_frame(raw, cfg.image_width, cfg.image_height);
  return {std::move(raw), std::move(frame)};
}

SyntheticScene generate_scene(std::uint64_t seed, int n_objects,
                              const SceneConfig& cfg) {
  if (n_objects < 0) throw ConfigError("generate_scene: n_objects < 0");
  check_scene_config(cfg);

  SyntheticScene scene;
  scene.cfg = cfg;
  auto [raw, frame] = make_stereo_rig(cfg);
  scene.raw_calib = std::move(raw);
  scene.calib = std::move(frame);

  Rng place_rng(Rng::derive(seed, 1));
  Rng surface_rng(Rng::derive(seed, 2));
  Rng clutter_rng(Rng::derive(seed, 3));

  const CameraModel& cam_l = scene.calib.view(0, CameraSide::Left);
  const CameraModel& cam_r = scene.calib.view(0, CameraSide::Right);

  std::vector<Box2D> placed_left, placed_right;
  for (int i = 0; i < n_objects; ++i) {
    const int cls = pick_class(place_rng, cfg);
    const std::string& label = cfg.classes[static_cast<std::size_t>(cls)];
    const AnchorDims base = cfg.dims.at(label);
    Box3D box;
    box.length = base.length * (1.0 + place_rng.uniform(-cfg.dim_jitter, cfg.dim_jitter));
    box.height = base.height * (1.0 + place_rng.uniform(-cfg.dim_jitter, cfg.dim_jitter));
    box.width = base.width * (1.0 + place_rng.uniform(-cfg.dim_jitter, cfg.dim_jitter));
    box.yaw = cfg.yaw_max > 0.0 ? place_rng.uniform(-cfg.yaw_max, cfg.yaw_max) : 0.0;
    const double radius = 0.5 * std::hypot(box.length, box.width);

    bool placed = false;
    for (int attempt = 0; attempt < cfg.max_placement_retries && !placed; ++attempt) {
      box.center = {place_rng.uniform(cfg.x_min, cfg.x_max),
                    place_rng.uniform(-cfg.y_extent, cfg.y_extent),
                    cfg.ground_z + box.height / 2.0};
      const auto corners = box3d_corners(box);

      if (cfg.keepout_y_lo < cfg.keepout_y_hi) {
        double y_lo = corners[0].y(), y_hi = corners[0].y();
        for (const auto& c : corners) {
          y_lo = std::min(y_lo, c.y());
          y_hi = std::max(y_hi, c.y());
        }
        if (y_hi > cfg.keepout_y_lo && y_lo < cfg.keepout_y_hi) continue;
      }

      bool clear = true;
      for (const auto& other : scene.gt) {
        const double other_radius = 0.5 * std::hypot(other.box.length, other.box.width);
        const double d = (box.center.head<2>() - other.box.center.head<2>()).norm();
        if (d < radius + other_radius + cfg.min_gap) clear = false;
        if (cfg.min_x_separation > 0.0 &&
            std::abs(box.center.x() - other.box.center.x()) < cfg.min_x_separation)
          clear = false;
      }
      if (!clear) continue;

      const auto aabb_l = corners_in_view(cam_l, corners, scene.calib.lidar_to_cam);
      const auto aabb_r = corners_in_view(cam_r, corners, scene.calib.lidar_to_cam);
      if (!aabb_l || !aabb_r) continue;
      if (cfg.min_gap_2d_px > 0.0) {
        bool apart = true;
        for (const auto& b : placed_left)
          if (!boxes_2d_apart(*aabb_l, b, cfg.min_gap_2d_px)) apart = false;
        for (const auto& b : placed_right)
          if (!boxes_2d_apart(*aabb_r, b, cfg.min_gap_2d_px)) apart = false;
        if (!apart) continue;
      }

      placed_left.push_back(*aabb_l);
      placed_right.push_back(*aabb_r);
      scene.gt.push_back({box, 1.0, label, i});
      placed = true;
    }
    if (!placed) {
      std::ostringstream msg;
      msg << "generate_scene: failed to place object " << i << " after "
          << cfg.max_placement_retries << " retries";
      throw DataError(msg.str());
    }
  }

  // Surface points, contiguous per object, density falling off with range.
  for (const auto& det : scene.gt) {
    const Box3D& box = det.box;
    const double area = 2.0 * (box.width * box.height + box.length * box.height +
                               box.length * box.width);
    const double range = std::max(1.0, box.center.head<2>().norm());
    const double density = cfg.points_per_m2_at_10m * (10.0 / range) * (10.0 / range);
    int count = static_cast<int>(std::lround(area * density));
    count = std::clamp(count, cfg.min_points_per_object, cfg.max_points_per_object);
    const int begin = static_cast<int>(scene.cloud.size());
    sample_box_surface(surface_rng, box, count, scene.cloud);
    scene.object_point_ranges.emplace_back(begin, static_cast<int>(scene.cloud.size()));
  }

  for (int i = 0; i < cfg.ground_points; ++i) {
    Point3 p;
    p.x = clutter_rng.uniform(2.0, cfg.x_max + 5.0);
    p.y = clutter_rng.uniform(-(cfg.y_extent + 3.0), cfg.y_extent + 3.0);
    p.z = cfg.ground_z + clutter_rng.uniform(-0.02, 0.02);
    p.r = static_cast<float>(clutter_rng.uniform(0.0, 1.0));
    scene.cloud.push_back(p);
  }

  for (std::size_t i = 0; i < scene.gt.size(); ++i) {
    const int idx = static_cast<int>(i);
    scene.gt_left.push_back({exact_2d_box(scene, idx, cam_l), 1.0,
                             scene.gt[i].label, ViewId{0, CameraSide::Left}});
    scene.gt_right.push_back({exact_2d_box(scene, idx, cam_r), 1.0,
                              scene.gt[i].label, ViewId{0, CameraSide::Right}});
  }
  return scene;
}

void validate_degradation(const DegradationSpec& spec) {
  auto probability = [](double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0))
      throw ConfigError(std::string("degradation: ") + name + " must lie in [0,1]");
  };
  probability(spec.lidar_dropout, "lidar_dropout");
  probability(spec.rgb_dropout, "rgb_dropout");
  probability(spec.fp_rate, "fp_rate");
  probability(spec.rgb_fp_rate, "rgb_fp_rate");
  for (const auto& [name, p] : spec.class_dropout) probability(p, name.c_str());
  if (spec.center_noise < 0.0 || spec.dim_noise < 0.0 || spec.yaw_noise < 0.0 ||
      spec.box_jitter_px < 0.0)
    throw ConfigError("degradation: noise scales must be non-negative");
  if (spec.fp_min_distance < 0.0)
    throw ConfigError("degradation: fp_min_distance must be non-negative");
  auto score_range = [](double lo, double hi, const char* name) {
    if (!(lo >= 0.0 && hi <= 1.0 && lo <= hi))
      throw ConfigError(std::string("degradation: ") + name +
                        " must be an ordered range within [0,1]");
  };
  score_range(spec.lidar_score_min, spec.lidar_score_max, "lidar_score");
  score_range(spec.rgb_score_min, spec.rgb_score_max, "rgb_score");
}

DegradationSpec parse_degradation_spec(const std::string& text) {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("degradation: invalid JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("degradation: root must be an object");

  static const std::set<std::string> known = {
      "lidar_dropout", "class_dropout", "center_noise", "dim_noise",
      "yaw_noise",     "fp_rate",       "fp_min_distance", "rgb_fp_rate",
      "box_jitter_px", "rgb_dropout",   "lidar_score",   "rgb_score"};
  for (const auto& [key, _] : root.items())
    if (!known.count(key))
      throw ConfigError("degradation: unknown key '" + key + "'");

  DegradationSpec spec;
  auto number = [&](const char* key, double& out) {
    if (!root.contains(key)) return;
    if (!root[key].is_number())
      throw ConfigError(std::string("degradation: '") + key + "' must be a number");
    out = root[key].get<double>();
  };
  number("lidar_dropout", spec.lidar_dropout);
  number("center_noise", spec.center_noise);
  number("dim_noise", spec.dim_noise);
  number("yaw_noise", spec.yaw_noise);
  number("fp_rate", spec.fp_rate);
  number("fp_min_distance", spec.fp_min_distance);
  number("rgb_fp_rate", spec.rgb_fp_rate);
  number("box_jitter_px", spec.box_jitter_px);
  number("rgb_dropout", spec.rgb_dropout);
  if (root.contains("class_dropout")) {
    if (!root["class_dropout"].is_object())
      throw ConfigError("degradation: 'class_dropout' must be an object");
    for (const auto& [name, value] : root["class_dropout"].items()) {
      if (!value.is_number())
        throw ConfigError("degradation: class_dropout values must be numbers");
      spec.class_dropout[name] = value.get<double>();
    }
  }
  auto range = [&](const char* key, double& lo, double& hi) {
    if (!root.contains(key)) return;
    const auto& arr = root[key];
    if (!arr.is_array() || arr.size() != 2 || !arr[0].is_number() || !arr[1].is_number())
      throw ConfigError(std::string("degradation: '") + key +
                        "' must be a [min, max] number pair");
    lo = arr[0].get<double>();
    hi = arr[1].get<double>();
  };
  range("lidar_score", spec.lidar_score_min, spec.lidar_score_max);
  range("rgb_score", spec.rgb_score_min, spec.rgb_score_max);

  validate_degradation(spec);
  return spec;
}

DegradationSpec load_degradation_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("degradation: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_degradation_spec(buf.str());
}

namespace {

/// Finds a spurious LiDAR box far from every ground-truth object in BEV
/// whose image projections stay clear of all ground-truth 2D boxes.
Box3D place_false_positive(Rng& rng, const SyntheticScene& scene,
                           const DegradationSpec& spec, const Box3D& shape) {
  const SceneConfig& cfg = scene.cfg;
  const CameraModel& cam_l = scene.calib.view(0, CameraSide::Left);
  const CameraModel& cam_r = scene.calib.view(0, CameraSide::Right);

  Box3D best = shape;
  double best_clearance = -1.0;
  bool best_clear_2d = false;
  for (int attempt = 0; attempt < 1000; ++attempt) {
    Box3D candidate = shape;
    candidate.center = {rng.uniform(cfg.x_min, cfg.x_max),
                        rng.uniform(-cfg.y_extent, cfg.y_extent),
                        cfg.ground_z + shape.height / 2.0};
    candidate.yaw = rng.uniform(-kPi, kPi);

    double clearance = 1e30;
    for (const auto& det : scene.gt)
      clearance = std::min(
          clearance, (candidate.center.head<2>() - det.box.center.head<2>()).norm());

    const auto corners = box3d_corners(candidate);
    const auto aabb_l = loose_corner_aabb(cam_l, corners, scene.calib.lidar_to_cam);
    const auto aabb_r = loose_corner_aabb(cam_r, corners, scene.calib.lidar_to_cam);
    bool clear_2d = true;
    for (std::size_t i = 0; i < scene.gt.size() && clear_2d; ++i) {
      if (aabb_l && !boxes_2d_apart(*aabb_l, scene.gt_left[i].box, 2.0)) clear_2d = false;
      if (aabb_r && !boxes_2d_apart(*aabb_r, scene.gt_right[i].box, 2.0)) clear_2d = false;
    }

    if (clear_2d && clearance >= spec.fp_min_distance) return candidate;
    if (clear_2d > best_clear_2d ||
        (clear_2d == best_clear_2d && clearance > best_clearance)) {
      best = candidate;
      best_clearance = clearance;
      best_clear_2d = clear_2d;
    }
  }
  return best;  // most isolated candidate seen
}

}  // namespace

SimulatedDetections simulate_detectors(const SyntheticScene& scene,
                                       const DegradationSpec& spec,
                                       std::uint64_t seed) {
  validate_degradation(spec);
  SimulatedDetections out;
  Rng drop_rng(Rng::derive(seed, 11));
  Rng noise_rng(Rng::derive(seed, 12));
  Rng fp_rng(Rng::derive(seed, 13));
  Rng rgb_rng(Rng::derive(seed, 14));
  Rng score_rng(Rng::derive(seed, 15));

  const SceneConfig& cfg = scene.cfg;
  const int n_gt = static_cast<int>(scene.gt.size());

  for (int i = 0; i < n_gt; ++i) {
    const auto& gt = scene.gt[static_cast<std::size_t>(i)];
    auto it = spec.class_dropout.find(gt.label);
    const double p_drop = it != spec.class_dropout.end() ? it->second : spec.lidar_dropout;
    if (drop_rng.bernoulli(p_drop)) {
      out.dropped_gt.push_back(i);
      continue;
    }
    Detection3D det = gt;
    det.box.center.x() += spec.center_noise * noise_rng.normal();
    det.box.center.y() += spec.center_noise * noise_rng.normal();
    det.box.center.z() += spec.center_noise * noise_rng.normal();
    det.box.length *= std::max(0.05, 1.0 + spec.dim_noise * noise_rng.normal());
    det.box.height *= std::max(0.05, 1.0 + spec.dim_noise * noise_rng.normal());
    det.box.width *= std::max(0.05, 1.0 + spec.dim_noise * noise_rng.normal());
    det.box.yaw = wrap_angle(det.box.yaw + spec.yaw_noise * noise_rng.normal());
    det.score = score_rng.uniform(spec.lidar_score_min, spec.lidar_score_max);
    out.lidar.push_back(det);
  }

  for (int i = 0; i < n_gt; ++i) {
    if (!fp_rng.bernoulli(spec.fp_rate)) continue;
    const int cls = pick_class(fp_rng, cfg);
    const std::string& label = cfg.classes[static_cast<std::size_t>(cls)];
    const AnchorDims dims = cfg.dims.at(label);
    Box3D shape;
    shape.length = dims.length;
    shape.height = dims.height;
    shape.width = dims.width;
    Detection3D det;
    det.box = place_false_positive(fp_rng, scene, spec, shape);
    det.score = score_rng.uniform(spec.lidar_score_min, spec.lidar_score_max);
    det.label = label;
    det.id = n_gt + static_cast<int>(out.injected_fp_ids.size());
    out.injected_fp_ids.push_back(det.id);
    out.lidar.push_back(det);
  }

  for (CameraSide side : {CameraSide::Left, CameraSide::Right}) {
    const auto& gt_2d = side == CameraSide::Left ? scene.gt_left : scene.gt_right;
    const double w_max = cfg.image_width - 1.0, h_max = cfg.image_height - 1.0;
    for (int i = 0; i < n_gt; ++i) {
      const bool dropped = rgb_rng.bernoulli(spec.rgb_dropout);
      Box2D box = gt_2d[static_cast<std::size_t>(i)].box;
      box.x_min += rgb_rng.uniform(-spec.box_jitter_px, spec.box_jitter_px);
      box.y_min += rgb_rng.uniform(-spec.box_jitter_px, spec.box_jitter_px);
      box.x_max += rgb_rng.uniform(-spec.box_jitter_px, spec.box_jitter_px);
      box.y_max += rgb_rng.uniform(-spec.box_jitter_px, spec.box_jitter_px);
      const double score = score_rng.uniform(spec.rgb_score_min, spec.rgb_score_max);
      if (dropped) continue;
      if (box.x_min > box.x_max) std::swap(box.x_min, box.x_max);
      if (box.y_min > box.y_max) std::swap(box.y_min, box.y_max);
      box.x_min = clamp(box.x_min, 0.0, w_max);
      box.x_max = clamp(box.x_max, 0.0, w_max);
      box.y_min = clamp(box.y_min, 0.0, h_max);
      box.y_max = clamp(box.y_max, 0.0, h_max);
      out.rgb.push_back({box, score, gt_2d[static_cast<std::size_t>(i)].label,
                         ViewId{0, side}});
    }
    for (int i = 0; i < n_gt; ++i) {
      if (!rgb_rng.bernoulli(spec.rgb_fp_rate)) continue;
      const double w = rgb_rng.uniform(20.0, 120.0);
      const double h = rgb_rng.uniform(20.0, 120.0);
      const double u = rgb_rng.uniform(0.0, w_max);
      const double v = rgb_rng.uniform(0.0, h_max);
      Box2D box{clamp(u - w / 2.0, 0.0, w_max), clamp(v - h / 2.0, 0.0, h_max),
                clamp(u + w / 2.0, 0.0, w_max), clamp(v + h / 2.0, 0.0, h_max)};
      const int cls = pick_class(rgb_rng, cfg);
      out.rgb.push_back({box, score_rng.uniform(spec.rgb_score_min, spec.rgb_score_max),
                         cfg.classes[static_cast<std::size_t>(cls)], ViewId{0, side}});
    }
  }
  return out;
}

std::vector<GtAnnotation> scene_annotations(const SyntheticScene& scene) {
  std::vector<GtAnnotation> out;
  out.reserve(scene.gt.size());
  for (std::size_t i = 0; i < scene.gt.size(); ++i) {
    GtAnnotation ann;
    ann.label = scene.gt[i].label;
    ann.truncation = 0.0;
    ann.occlusion = 0;
    ann.bbox = scene.gt_left[i].box;
    ann.box = scene.gt[i].box;
    const KittiBox kb = internal_box_to_kitti(scene.gt[i].box, scene.calib.lidar_to_cam);
    ann.alpha = kitti_alpha(kb.ry, kb.x, kb.z);
    out.push_back(ann);
  }
  return out;
}

}  // namespace lcf
