#include "lcfusion/kitti_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "lcfusion/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "binary cloud I/O assumes a little-endian host");
static_assert(sizeof(float) == 4, "binary cloud I/O assumes 32-bit floats");

namespace lcf {
namespace {

namespace fs = std::filesystem;

struct LabelRow {
  std::string type;
  double truncated = 0;
  int occluded = 0;
  double alpha = 0;
  Box2D bbox;
  double h = 0, w = 0, l = 0;
  double x = 0, y = 0, z = 0;
  double ry = 0;
  double score = 1.0;
};

bool keep_class(const std::string& type, const ReadOptions& options,
                const fs::path& path, int line_no) {
  if (options.classes.empty()) return true;
  if (std::find(options.classes.begin(), options.classes.end(), type) !=
      options.classes.end()) {
    return true;
  }
  if (options.unknown == UnknownClassPolicy::Error) {
    throw DataError(path.string() + ":" + std::to_string(line_no) +
                    ": unknown class \"" + type + "\"");
  }
  return false;
}

std::vector<LabelRow> read_label_rows(const fs::path& path, LabelKind kind,
                                      const ReadOptions& options) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  const std::size_t expected = kind == LabelKind::Result ? 16 : 15;

  std::vector<LabelRow> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream iss(line);
    std::vector<std::string> tokens;
    std::string token;
    while (iss >> token) tokens.push_back(token);
    if (tokens.empty()) continue;
    if (tokens.size() != expected) {
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": expected " + std::to_string(expected) +
                      " columns, got " + std::to_string(tokens.size()));
    }

    std::array<double, 15> values{};
    for (std::size_t i = 1; i < tokens.size(); ++i) {
      std::size_t pos = 0;
      try {
        values[i - 1] = std::stod(tokens[i], &pos);
      } catch (const std::exception&) {
        pos = 0;
      }
      if (pos != tokens[i].size()) {
        throw DataError(path.string() + ":" + std::to_string(line_no) +
                        ": non-numeric token \"" + tokens[i] + "\"");
      }
    }

    LabelRow row;
    row.type = tokens[0];
    row.truncated = values[0];
    row.occluded = static_cast<int>(std::lround(values[1]));
    row.alpha = values[2];
    row.bbox = Box2D{values[3], values[4], values[5], values[6]};
    row.h = values[7];
    row.w = values[8];
    row.l = values[9];
    row.x = values[10];
    row.y = values[11];
    row.z = values[12];
    row.ry = values[13];
    row.score = kind == LabelKind::Result ? values[14] : 1.0;
    if (!keep_class(row.type, options, path, line_no)) continue;
    rows.push_back(std::move(row));
  }
  return rows;
}

void append_fields(std::string& out, const char* type, double truncated,
                   int occluded, double alpha, const Box2D& bbox,
                   double h, double w, double l, double x, double y, double z,
                   double ry) {
  char buf[400];
  std::snprintf(buf, sizeof(buf),
                "%s %.4f %d %.4f %.4f %.4f %.4f %.4f %.4f %.4f %.4f %.4f "
                "%.4f %.4f %.4f",
                type, truncated, occluded, alpha, bbox.x_min, bbox.y_min,
                bbox.x_max, bbox.y_max, h, w, l, x, y, z, ry);
  out += buf;
}

}  // namespace

const std::vector<double>* KittiCalib::find(const std::string& key) const {
  for (const auto& [k, values] : rows) {
    if (k == key) return &values;
  }
  return nullptr;
}

Eigen::Matrix<double, 3, 4> KittiCalib::matrix34(const std::string& key) const {
  const auto* values = find(key);
  if (!values) throw DataError("calibration: missing key " + key);
  if (values->size() != 12) {
    throw DataError("calibration: key " + key + " expects 12 values, got " +
                    std::to_string(values->size()));
  }
  Eigen::Matrix<double, 3, 4> m;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 4; ++c) {
      m(r, c) = (*values)[static_cast<std::size_t>(r * 4 + c)];
    }
  }
  return m;
}

Eigen::Matrix3d KittiCalib::matrix33(const std::string& key) const {
  const auto* values = find(key);
  if (!values) throw DataError("calibration: missing key " + key);
  if (values->size() != 9) {
    throw DataError("calibration: key " + key + " expects 9 values, got " +
                    std::to_string(values->size()));
  }
  Eigen::Matrix3d m;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      m(r, c) = (*values)[static_cast<std::size_t>(r * 3 + c)];
    }
  }
  return m;
}

KittiCalib read_calibration(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());

  KittiCalib calib;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::size_t colon = line.find(':');
    if (colon == std::string::npos) {
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": expected \"KEY: values\"");
    }
    std::string key = line.substr(0, colon);
    while (!key.empty() && (key.back() == ' ' || key.back() == '\t')) {
      key.pop_back();
    }
    std::istringstream iss(line.substr(colon + 1));
    std::vector<double> values;
    std::string token;
    while (iss >> token) {
      std::size_t pos = 0;
      double v = 0;
      try {
        v = std::stod(token, &pos);
      } catch (const std::exception&) {
        pos = 0;
      }
      if (pos != token.size()) {
        throw DataError(path.string() + ":" + std::to_string(line_no) +
                        ": non-numeric token \"" + token + "\" under key " +
                        key);
      }
      values.push_back(v);
    }
    // Validate the counts of the well-known keys right away.
    const bool is_proj = key.size() == 2 && key[0] == 'P';
    if ((is_proj || key == "Tr_velo_to_cam" || key == "Tr_imu_to_velo") &&
        values.size() != 12) {
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": key " + key + " expects 12 values, got " +
                      std::to_string(values.size()));
    }
    if (key == "R0_rect" && values.size() != 9) {
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": key R0_rect expects 9 values, got " +
                      std::to_string(values.size()));
    }
    calib.rows.emplace_back(std::move(key), std::move(values));
  }
  return calib;
}

void write_calibration(const KittiCalib& calib, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& [key, values] : calib.rows) {
    out << key << ':';
    char buf[32];
    for (const double v : values) {
      std::snprintf(buf, sizeof(buf), " %.12e", v);
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw DataError("write failed: " + path.string());
}

CalibrationFrame to_calibration_frame(const KittiCalib& calib,
                                      int image_width, int image_height) {
  CalibrationFrame frame;
  Eigen::Matrix4d rect = Eigen::Matrix4d::Identity();
  rect.topLeftCorner<3, 3>() = calib.matrix33("R0_rect");
  Eigen::Matrix4d velo = Eigen::Matrix4d::Identity();
  velo.topRows<3>() = calib.matrix34("Tr_velo_to_cam");
  frame.lidar_to_cam = rect * velo;

  StereoPair pair;
  pair.left.P = calib.matrix34("P2");
  pair.left.image_width = image_width;
  pair.left.image_height = image_height;
  pair.right.P = calib.matrix34("P3");
  pair.right.image_width = image_width;
  pair.right.image_height = image_height;
  frame.pairs.push_back(pair);
  return frame;
}

std::vector<Point3> read_point_cloud(const fs::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw DataError("cannot open " + path.string());
  const std::streamsize size = in.tellg();
  if (size % 16 != 0) {
    throw DataError(path.string() + ": size " + std::to_string(size) +
                    " is not a multiple of the 16-byte record");
  }
  in.seekg(0);
  std::vector<float> buffer(static_cast<std::size_t>(size) / 4);
  if (size > 0) {
    in.read(reinterpret_cast<char*>(buffer.data()), size);
    if (!in) throw DataError("short read: " + path.string());
  }
  std::vector<Point3> points;
  points.reserve(buffer.size() / 4);
  for (std::size_t i = 0; i + 3 < buffer.size(); i += 4) {
    points.push_back(Point3{buffer[i], buffer[i + 1], buffer[i + 2],
                            buffer[i + 3]});
  }
  return points;
}

void write_point_cloud(std::span<const Point3> points, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  for (const Point3& p : points) {
    const float values[4] = {static_cast<float>(p.x), static_cast<float>(p.y),
                             static_cast<float>(p.z), static_cast<float>(p.r)};
    out.write(reinterpret_cast<const char*>(values), sizeof(values));
  }
  if (!out) throw DataError("write failed: " + path.string());
}

Box3D kitti_box_to_internal(double x, double y, double z, double h, double w,
                            double l, double ry,
                            const Eigen::Matrix4d& lidar_to_cam) {
  const Eigen::Matrix4d cam_to_lidar = lidar_to_cam.inverse();
  const Eigen::Vector3d center_cam(x, y - 0.5 * h, z);
  const Eigen::Vector3d heading_cam(std::cos(ry), 0.0, -std::sin(ry));
  Box3D box;
  box.center = (cam_to_lidar * center_cam.homogeneous()).head<3>();
  box.length = l;
  box.height = h;
  box.width = w;
  const Eigen::Vector3d heading =
      cam_to_lidar.topLeftCorner<3, 3>() * heading_cam;
  box.yaw = wrap_angle(std::atan2(heading.y(), heading.x()));
  return box;
}

KittiBox internal_box_to_kitti(const Box3D& box,
                               const Eigen::Matrix4d& lidar_to_cam) {
  const Eigen::Vector3d center_cam =
      (lidar_to_cam * box.center.homogeneous()).head<3>();
  const Eigen::Vector3d heading(std::cos(box.yaw), std::sin(box.yaw), 0.0);
  const Eigen::Vector3d heading_cam =
      lidar_to_cam.topLeftCorner<3, 3>() * heading;
  KittiBox out;
  out.x = center_cam.x();
  out.y = center_cam.y() + 0.5 * box.height;
  out.z = center_cam.z();
  out.h = box.height;
  out.w = box.width;
  out.l = box.length;
  out.ry = std::atan2(-heading_cam.z(), heading_cam.x());
  return out;
}

double kitti_alpha(double ry, double x, double z) {
  return wrap_angle(ry - std::atan2(x, z));
}

std::vector<Detection2D> read_detections_2d(const fs::path& path,
                                            LabelKind kind, ViewId view,
                                            const ReadOptions& options) {
  std::vector<Detection2D> out;
  for (const LabelRow& row : read_label_rows(path, kind, options)) {
    Detection2D det;
    det.box = row.bbox;
    det.score = row.score;
    det.label = row.type;
    det.view = view;
    out.push_back(std::move(det));
  }
  return out;
}

std::vector<Detection3D> read_detections_3d(const fs::path& path,
                                            LabelKind kind,
                                            const CalibrationFrame& calib,
                                            const ReadOptions& options) {
  std::vector<Detection3D> out;
  for (const LabelRow& row : read_label_rows(path, kind, options)) {
    Detection3D det;
    det.box = kitti_box_to_internal(row.x, row.y, row.z, row.h, row.w, row.l,
                                    row.ry, calib.lidar_to_cam);
    det.score = row.score;
    det.label = row.type;
    det.id = static_cast<int>(out.size());
    out.push_back(std::move(det));
  }
  return out;
}

std::vector<GtAnnotation> read_annotations(const fs::path& path,
                                           const CalibrationFrame& calib,
                                           const ReadOptions& options) {
  std::vector<GtAnnotation> out;
  for (const LabelRow& row :
       read_label_rows(path, LabelKind::GroundTruth, options)) {
    GtAnnotation gt;
    gt.label = row.type;
    gt.truncation = row.truncated;
    gt.occlusion = row.occluded;
    gt.alpha = row.alpha;
    gt.bbox = row.bbox;
    gt.box = kitti_box_to_internal(row.x, row.y, row.z, row.h, row.w, row.l,
                                   row.ry, calib.lidar_to_cam);
    out.push_back(std::move(gt));
  }
  return out;
}

void write_results(std::span<const Detection3D> dets,
                   const CalibrationFrame& calib, const fs::path& path) {
  if (calib.pairs.empty()) {
    throw DataError("write_results: calibration declares no stereo pair");
  }
  const CameraModel& cam = calib.pairs.front().left;
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  for (const Detection3D& det : dets) {
    const KittiBox kb = internal_box_to_kitti(det.box, calib.lidar_to_cam);
    const auto corners = box3d_corners(det.box);
    const auto cam_pts = transform_points(corners, calib.lidar_to_cam);
    const auto bbox = enclosing_aabb(project_points(cam_pts, cam));
    const Box2D box2d = bbox ? *bbox : Box2D{-1.0, -1.0, -1.0, -1.0};
    const double alpha = kitti_alpha(kb.ry, kb.x, kb.z);

    std::string line;
    append_fields(line, det.label.c_str(), -1.0, -1, alpha, box2d, kb.h, kb.w,
                  kb.l, kb.x, kb.y, kb.z, kb.ry);
    char score[24];
    std::snprintf(score, sizeof(score), " %.4f", det.score);
    line += score;
    out << line << '\n';
  }
  if (!out) throw DataError("write failed: " + path.string());
}

void write_labels(std::span<const GtAnnotation> annotations,
                  const CalibrationFrame& calib, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  for (const GtAnnotation& gt : annotations) {
    const KittiBox kb = internal_box_to_kitti(gt.box, calib.lidar_to_cam);
    std::string line;
    append_fields(line, gt.label.c_str(), gt.truncation, gt.occlusion,
                  gt.alpha, gt.bbox, kb.h, kb.w, kb.l, kb.x, kb.y, kb.z,
                  kb.ry);
    out << line << '\n';
  }
  if (!out) throw DataError("write failed: " + path.string());
}

void write_detections_2d(std::span<const Detection2D> dets,
                         const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  for (const Detection2D& det : dets) {
    std::string line;
    append_fields(line, det.label.c_str(), -1.0, -1, -10.0, det.box, -1.0,
                  -1.0, -1.0, -1000.0, -1000.0, -1000.0, -10.0);
    char score[24];
    std::snprintf(score, sizeof(score), " %.4f", det.score);
    line += score;
    out << line << '\n';
  }
  if (!out) throw DataError("write failed: " + path.string());
}

}  // namespace lcf
