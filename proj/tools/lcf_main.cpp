#include <atomic>
#include <chrono>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "lcfusion/errors.hpp"
#include "lcfusion/evaluation.hpp"
#include "lcfusion/kitti_io.hpp"
#include "lcfusion/pipeline.hpp"
#include "lcfusion/rng.hpp"
#include "lcfusion/synthetic.hpp"

namespace fs = std::filesystem;
using namespace lcf;

namespace {

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
        .count();
  }
};

/// Sorted stems of all regular files in dir with the given extension.
std::vector<std::string> list_stems(const fs::path& dir, const std::string& ext) {
  if (!fs::is_directory(dir))
    throw DataError("directory not found: " + dir.string());
  std::vector<std::string> stems;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ext)
      stems.push_back(entry.path().stem().string());
  std::sort(stems.begin(), stems.end());
  return stems;
}

fs::path require_file(const fs::path& dir, const std::string& stem,
                      const std::string& ext) {
  fs::path p = dir / (stem + ext);
  if (!fs::is_regular_file(p))
    throw DataError("frame '" + stem + "': missing " + p.string());
  return p;
}

/// Overridable numeric flags layered over the config file.
struct Overrides {
  std::optional<double> tau_b, tau_r, enlargement, d_max;
  std::optional<double> lidar_score_thr, lidar_nms_iou, rgb_score_thr;
  std::optional<int> p_min;
  std::optional<std::string> localizer;

  void apply(FusionConfig& cfg) const {
    if (tau_b) cfg.tau_b = *tau_b;
    if (tau_r) cfg.tau_r = *tau_r;
    if (enlargement) cfg.enlargement = *enlargement;
    if (d_max) cfg.d_max = *d_max;
    if (lidar_score_thr) cfg.lidar_score_thr = *lidar_score_thr;
    if (lidar_nms_iou) cfg.lidar_nms_iou = *lidar_nms_iou;
    if (rgb_score_thr) cfg.rgb_score_thr = *rgb_score_thr;
    if (p_min) cfg.p_min = *p_min;
    if (localizer) cfg.localizer = *localizer;
  }
};

void add_override_flags(CLI::App* cmd, Overrides& ov) {
  cmd->add_option("--tau-b", ov.tau_b, "Min projection IoU to keep a 2D/3D match");
  cmd->add_option("--tau-r", ov.tau_r, "Geometric consistency gate for recovery");
  cmd->add_option("--enlargement", ov.enlargement, "Frustum box enlargement fraction");
  cmd->add_option("--d-max", ov.d_max, "Epipolar pairing cost gate, px");
  cmd->add_option("--lidar-score-thr", ov.lidar_score_thr, "LiDAR confidence floor");
  cmd->add_option("--lidar-nms-iou", ov.lidar_nms_iou, "BEV NMS suppression IoU");
  cmd->add_option("--rgb-score-thr", ov.rgb_score_thr, "RGB confidence floor");
  cmd->add_option("--p-min", ov.p_min, "Proposals need more points than this");
  cmd->add_option("--localizer", ov.localizer,
                  "Frustum localizer: geometric | external:<dir>");
}

FusionConfig make_config(const std::optional<std::string>& config_path,
                         const Overrides& ov) {
  FusionConfig cfg = config_path ? load_config(*config_path) : FusionConfig{};
  ov.apply(cfg);
  validate_config(cfg);
  return cfg;
}

ReadOptions read_options(const FusionConfig& cfg) {
  ReadOptions opt;
  opt.classes = cfg.classes;
  opt.unknown = cfg.unknown_class;
  return opt;
}

struct FuseArgs {
  std::string lidar_dets, dets_left, dets_right, calib, clouds, out;
  std::optional<std::string> config;
  int jobs = 1;
  Overrides overrides;
};

int run_fuse(const FuseArgs& args) {
  Timer timer;
  const FusionConfig cfg = make_config(args.config, args.overrides);
  const ReadOptions opt = read_options(cfg);

  const std::vector<std::string> stems = list_stems(args.lidar_dets, ".txt");
  for (const auto& d : {args.dets_left, args.dets_right, args.calib, args.clouds})
    if (!fs::is_directory(d)) throw DataError("directory not found: " + d);
  fs::create_directories(args.out);

  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= stems.size()) return;
      {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (first_error) return;
      }
      try {
        const std::string& stem = stems[i];
        const KittiCalib raw =
            read_calibration(require_file(args.calib, stem, ".txt"));
        const CalibrationFrame calib =
            to_calibration_frame(raw, cfg.image_width, cfg.image_height);

        FrameBundle bundle;
        bundle.frame_id = stem;
        bundle.calib = calib;
        bundle.lidar = read_detections_3d(require_file(args.lidar_dets, stem, ".txt"),
                                          LabelKind::Result, calib, opt);
        bundle.rgb = read_detections_2d(require_file(args.dets_left, stem, ".txt"),
                                        LabelKind::Result,
                                        ViewId{0, CameraSide::Left}, opt);
        const auto right =
            read_detections_2d(require_file(args.dets_right, stem, ".txt"),
                               LabelKind::Result, ViewId{0, CameraSide::Right}, opt);
        bundle.rgb.insert(bundle.rgb.end(), right.begin(), right.end());
        bundle.cloud = read_point_cloud(require_file(args.clouds, stem, ".bin"));

        const FusionOutcome outcome = fuse_frame(bundle, cfg);
        write_results(outcome.fused, calib, fs::path(args.out) / (stem + ".txt"));
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  const int jobs = std::max(1, args.jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  std::fprintf(stderr, "fused %zu frames in %.3f s\n", stems.size(),
               timer.seconds());
  return 0;
}

struct EvalArgs {
  std::string results, gt, calib;
  std::optional<std::string> config;
  Overrides overrides;
};

int run_eval(const EvalArgs& args) {
  Timer timer;
  const FusionConfig cfg = make_config(args.config, args.overrides);
  const ReadOptions opt = read_options(cfg);

  const std::vector<std::string> stems = list_stems(args.gt, ".txt");
  if (stems.empty())
    throw DataError("no ground-truth label files in " + args.gt);
  if (!fs::is_directory(args.results))
    throw DataError("directory not found: " + args.results);

  std::vector<std::vector<Detection3D>> dets;
  std::vector<std::vector<GtAnnotation>> gts;
  for (const auto& stem : stems) {
    const KittiCalib raw = read_calibration(require_file(args.calib, stem, ".txt"));
    const CalibrationFrame calib =
        to_calibration_frame(raw, cfg.image_width, cfg.image_height);
    gts.push_back(read_annotations(args.gt + "/" + stem + ".txt", calib, opt));
    const fs::path result = fs::path(args.results) / (stem + ".txt");
    dets.push_back(fs::is_regular_file(result)
                       ? read_detections_3d(result, LabelKind::Result, calib, opt)
                       : std::vector<Detection3D>{});
  }

  const EvalReport report = evaluate_detections(
      dets, gts, cfg.classes, cfg.iou_threshold_list(), cfg.ap_interp,
      cfg.difficulty);
  std::cout << eval_report_table(report);

  const fs::path report_path = fs::path(args.results) / "eval_report.json";
  std::ofstream out(report_path);
  if (!out) throw DataError("cannot write " + report_path.string());
  out << eval_report_json(report);
  out.close();

  std::fprintf(stderr, "evaluated %zu frames in %.3f s (report: %s)\n",
               stems.size(), timer.seconds(), report_path.string().c_str());
  return 0;
}

struct SynthArgs {
  std::uint64_t seed = 0;
  int frames = 0;
  int objects = 6;
  std::string out;
  std::optional<std::string> degradation;
};

int run_synth(const SynthArgs& args) {
  Timer timer;
  const DegradationSpec spec =
      args.degradation ? load_degradation_spec(*args.degradation) : DegradationSpec{};
  const SceneConfig scene_cfg;

  const fs::path root(args.out);
  const fs::path clouds = root / "velodyne", calib_dir = root / "calib";
  const fs::path labels = root / "label_2", lidar_dir = root / "dets_lidar";
  const fs::path left_dir = root / "dets_left", right_dir = root / "dets_right";
  for (const auto& d : {clouds, calib_dir, labels, lidar_dir, left_dir, right_dir})
    fs::create_directories(d);

  for (int f = 0; f < args.frames; ++f) {
    char stem[16];
    std::snprintf(stem, sizeof stem, "%06d", f);
    const std::uint64_t scene_seed = Rng::derive_seed(args.seed, static_cast<std::uint64_t>(f));
    const SyntheticScene scene = generate_scene(scene_seed, args.objects, scene_cfg);
    const SimulatedDetections sim =
        simulate_detectors(scene, spec, Rng::derive_seed(scene_seed, 99));

    write_point_cloud(scene.cloud, clouds / (std::string(stem) + ".bin"));
    write_calibration(scene.raw_calib, calib_dir / (std::string(stem) + ".txt"));
    write_labels(scene_annotations(scene), scene.calib,
                 labels / (std::string(stem) + ".txt"));
    write_results(sim.lidar, scene.calib, lidar_dir / (std::string(stem) + ".txt"));
    std::vector<Detection2D> left, right;
    for (const auto& det : sim.rgb)
      (det.view.side == CameraSide::Left ? left : right).push_back(det);
    write_detections_2d(left, left_dir / (std::string(stem) + ".txt"));
    write_detections_2d(right, right_dir / (std::string(stem) + ".txt"));
  }

  std::fprintf(stderr, "wrote %d synthetic frames to %s in %.3f s\n", args.frames,
               args.out.c_str(), timer.seconds());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stereo-LiDAR late-fusion pipeline"};
  app.require_subcommand(1);

  FuseArgs fuse_args;
  CLI::App* fuse = app.add_subcommand(
      "fuse", "Fuse LiDAR and stereo RGB detections over a frame directory");
  fuse->add_option("--lidar-dets", fuse_args.lidar_dets, "3D detection directory")
      ->required();
  fuse->add_option("--dets-left", fuse_args.dets_left, "Left-view 2D detections")
      ->required();
  fuse->add_option("--dets-right", fuse_args.dets_right, "Right-view 2D detections")
      ->required();
  fuse->add_option("--calib", fuse_args.calib, "Calibration directory")->required();
  fuse->add_option("--clouds", fuse_args.clouds, "Point cloud directory")->required();
  fuse->add_option("--out", fuse_args.out, "Output directory")->required();
  fuse->add_option("--config", fuse_args.config, "JSON config file");
  fuse->add_option("--jobs", fuse_args.jobs, "Worker threads")
      ->check(CLI::PositiveNumber);
  add_override_flags(fuse, fuse_args.overrides);

  EvalArgs eval_args;
  CLI::App* eval = app.add_subcommand(
      "eval", "Score KITTI-format results against ground-truth labels");
  eval->add_option("--results", eval_args.results, "Result directory")->required();
  eval->add_option("--gt", eval_args.gt, "Ground-truth label directory")->required();
  eval->add_option("--calib", eval_args.calib, "Calibration directory")->required();
  eval->add_option("--config", eval_args.config, "JSON config file");
  add_override_flags(eval, eval_args.overrides);

  SynthArgs synth_args;
  CLI::App* synth = app.add_subcommand(
      "synth", "Generate a synthetic stereo-LiDAR dataset with simulated detectors");
  synth->add_option("--seed", synth_args.seed, "Master seed");
  synth->add_option("--frames", synth_args.frames, "Frame count")
      ->required()
      ->check(CLI::NonNegativeNumber);
  synth->add_option("--objects", synth_args.objects, "Objects per frame")
      ->check(CLI::NonNegativeNumber);
  synth->add_option("--out", synth_args.out, "Output dataset root")->required();
  synth->add_option("--degradation", synth_args.degradation,
                    "JSON detector degradation spec");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (fuse->parsed()) return run_fuse(fuse_args);
    if (eval->parsed()) return run_eval(eval_args);
    if (synth->parsed()) return run_synth(synth_args);
    std::cerr << "no subcommand given\n";
    return 1;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
