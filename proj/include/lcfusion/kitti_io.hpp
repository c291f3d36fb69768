#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lcfusion/config.hpp"
#include "lcfusion/detections.hpp"

namespace lcf {

/// Raw calibration rows ("KEY: v1 v2 ...") in file order, so files
/// round-trip without loss.
struct KittiCalib {
  std::vector<std::pair<std::string, std::vector<double>>> rows;

  const std::vector<double>* find(const std::string& key) const;
  /// 12-value row as a 3x4 matrix (row major). Throws DataError when the
  /// key is missing or the count differs.
  Eigen::Matrix<double, 3, 4> matrix34(const std::string& key) const;
  /// 9-value row as a 3x3 matrix (row major).
  Eigen::Matrix3d matrix33(const std::string& key) const;
};

/// Label/result rows: ground-truth files carry 15 columns, result files a
/// trailing 16th score column.
enum class LabelKind { GroundTruth, Result };

/// Class filtering while reading label rows. An empty class list accepts
/// everything.
struct ReadOptions {
  std::vector<std::string> classes;
  UnknownClassPolicy unknown = UnknownClassPolicy::Skip;
};

/// One frame's worth of pipeline input.
struct FrameBundle {
  std::string frame_id;
  std::vector<Point3> cloud;
  CalibrationFrame calib;
  std::vector<Detection2D> rgb;     // all views, each tagged
  std::vector<Detection3D> lidar;
  std::vector<GtAnnotation> ground_truth;  // optional, may be empty
};

KittiCalib read_calibration(const std::filesystem::path& path);
void write_calibration(const KittiCalib& calib,
                       const std::filesystem::path& path);

/// Builds the working calibration: T = homogeneous(R0_rect) *
/// homogeneous(Tr_velo_to_cam); P2/P3 become the left/right views of
/// stereo pair 0.
CalibrationFrame to_calibration_frame(const KittiCalib& calib,
                                      int image_width, int image_height);

/// Binary cloud format: consecutive 16-byte records of four little-endian
/// 32-bit floats (x, y, z, reflectance).
std::vector<Point3> read_point_cloud(const std::filesystem::path& path);
void write_point_cloud(std::span<const Point3> points,
                       const std::filesystem::path& path);

/// KITTI camera-frame bottom-center box -> internal LiDAR-frame box.
Box3D kitti_box_to_internal(double x, double y, double z, double h, double w,
                            double l, double ry,
                            const Eigen::Matrix4d& lidar_to_cam);

struct KittiBox {
  double x = 0, y = 0, z = 0;  // bottom-face center, camera frame
  double h = 0, w = 0, l = 0;
  double ry = 0;
};
KittiBox internal_box_to_kitti(const Box3D& box,
                               const Eigen::Matrix4d& lidar_to_cam);

/// Observation angle from the box heading and viewing direction.
double kitti_alpha(double ry, double x, double z);

std::vector<Detection2D> read_detections_2d(const std::filesystem::path& path,
                                            LabelKind kind, ViewId view,
                                            const ReadOptions& options = {});
std::vector<Detection3D> read_detections_3d(const std::filesystem::path& path,
                                            LabelKind kind,
                                            const CalibrationFrame& calib,
                                            const ReadOptions& options = {});
std::vector<GtAnnotation> read_annotations(const std::filesystem::path& path,
                                           const CalibrationFrame& calib,
                                           const ReadOptions& options = {});

/// 16-column result rows. The 2D box is the projection of the box corners
/// into the left view of pair 0 (all-behind boxes get a -1 box), alpha is
/// recomputed, truncation/occlusion are written as -1.
void write_results(std::span<const Detection3D> dets,
                   const CalibrationFrame& calib,
                   const std::filesystem::path& path);

/// 15-column ground-truth rows from full annotations.
void write_labels(std::span<const GtAnnotation> annotations,
                  const CalibrationFrame& calib,
                  const std::filesystem::path& path);

/// 16-column rows carrying only the 2D box, label and score; the 3D fields
/// hold the customary placeholder values.
void write_detections_2d(std::span<const Detection2D> dets,
                         const std::filesystem::path& path);

}  // namespace lcf
