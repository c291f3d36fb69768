#include "lcfusion/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lcfusion/errors.hpp"

namespace lcf {
namespace {

using nlohmann::json;

void require_keys(const json& obj, const std::string& where,
                  const std::set<std::string>& allowed) {
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) {
      throw ConfigError("config: unknown key \"" + key + "\" in " + where);
    }
  }
}

double get_number(const json& obj, const std::string& key, double fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number()) {
    throw ConfigError("config: \"" + key + "\" must be a number");
  }
  return obj[key].get<double>();
}

int get_int(const json& obj, const std::string& key, int fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number_integer()) {
    throw ConfigError("config: \"" + key + "\" must be an integer");
  }
  return obj[key].get<int>();
}

bool get_bool(const json& obj, const std::string& key, bool fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_boolean()) {
    throw ConfigError("config: \"" + key + "\" must be a boolean");
  }
  return obj[key].get<bool>();
}

std::string get_string(const json& obj, const std::string& key,
                       const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_string()) {
    throw ConfigError("config: \"" + key + "\" must be a string");
  }
  return obj[key].get<std::string>();
}

void parse_matching(const json& obj, FusionConfig& cfg) {
  require_keys(obj, "matching",
               {"tau_b", "lidar_score_threshold", "lidar_nms_iou",
                "rgb_score_threshold"});
  cfg.tau_b = get_number(obj, "tau_b", cfg.tau_b);
  cfg.lidar_score_thr =
      get_number(obj, "lidar_score_threshold", cfg.lidar_score_thr);
  cfg.lidar_nms_iou = get_number(obj, "lidar_nms_iou", cfg.lidar_nms_iou);
  cfg.rgb_score_thr =
      get_number(obj, "rgb_score_threshold", cfg.rgb_score_thr);
}

void parse_recovery(const json& obj, FusionConfig& cfg) {
  require_keys(obj, "recovery",
               {"tau_r", "enlargement", "p_min", "d_max", "class_gating",
                "localizer", "external_timeout_s"});
  cfg.tau_r = get_number(obj, "tau_r", cfg.tau_r);
  cfg.enlargement = get_number(obj, "enlargement", cfg.enlargement);
  cfg.p_min = get_int(obj, "p_min", cfg.p_min);
  cfg.d_max = get_number(obj, "d_max", cfg.d_max);
  cfg.stereo_class_gating =
      get_bool(obj, "class_gating", cfg.stereo_class_gating);
  cfg.localizer = get_string(obj, "localizer", cfg.localizer);
  cfg.external_timeout_s =
      get_number(obj, "external_timeout_s", cfg.external_timeout_s);
}

void parse_fusion(const json& obj, FusionConfig& cfg) {
  require_keys(obj, "fusion", {"prior", "class_priors"});
  const std::string prior = get_string(obj, "prior", "uniform");
  if (prior == "uniform") {
    cfg.prior_mode = PriorMode::Uniform;
  } else if (prior == "frequency") {
    cfg.prior_mode = PriorMode::Frequency;
  } else {
    throw ConfigError("config: prior must be \"uniform\" or \"frequency\"");
  }
  if (obj.contains("class_priors")) {
    if (!obj["class_priors"].is_object()) {
      throw ConfigError("config: class_priors must map class to weight");
    }
    cfg.class_priors.clear();
    for (const auto& [key, value] : obj["class_priors"].items()) {
      if (!value.is_number()) {
        throw ConfigError("config: class_priors values must be numbers");
      }
      cfg.class_priors[key] = value.get<double>();
    }
  }
}

void parse_classes(const json& obj, FusionConfig& cfg) {
  require_keys(obj, "classes", {"names", "anchors", "unknown"});
  if (obj.contains("names")) {
    if (!obj["names"].is_array()) {
      throw ConfigError("config: classes.names must be an array");
    }
    cfg.classes.clear();
    for (const auto& v : obj["names"]) {
      if (!v.is_string()) {
        throw ConfigError("config: classes.names entries must be strings");
      }
      cfg.classes.push_back(v.get<std::string>());
    }
  }
  if (obj.contains("anchors")) {
    if (!obj["anchors"].is_object()) {
      throw ConfigError("config: classes.anchors must be an object");
    }
    cfg.anchors.clear();
    for (const auto& [key, value] : obj["anchors"].items()) {
      if (!value.is_array() || value.size() != 3) {
        throw ConfigError("config: anchor for \"" + key +
                          "\" must be [length, height, width]");
      }
      AnchorDims dims;
      dims.length = value[0].get<double>();
      dims.height = value[1].get<double>();
      dims.width = value[2].get<double>();
      cfg.anchors[key] = dims;
    }
  }
  const std::string unknown = get_string(obj, "unknown", "skip");
  if (unknown == "skip") {
    cfg.unknown_class = UnknownClassPolicy::Skip;
  } else if (unknown == "error") {
    cfg.unknown_class = UnknownClassPolicy::Error;
  } else {
    throw ConfigError("config: classes.unknown must be \"skip\" or \"error\"");
  }
}

void parse_eval(const json& obj, FusionConfig& cfg) {
  require_keys(obj, "eval",
               {"interpolation", "iou_thresholds", "min_height",
                "max_occlusion", "max_truncation"});
  const std::string interp = get_string(obj, "interpolation", "r40");
  if (interp == "r40") {
    cfg.ap_interp = ApInterpolation::R40;
  } else if (interp == "r11") {
    cfg.ap_interp = ApInterpolation::R11;
  } else {
    throw ConfigError("config: eval.interpolation must be \"r40\" or \"r11\"");
  }
  if (obj.contains("iou_thresholds")) {
    if (!obj["iou_thresholds"].is_object()) {
      throw ConfigError("config: eval.iou_thresholds must map class to value");
    }
    cfg.eval_iou_thresholds.clear();
    for (const auto& [key, value] : obj["iou_thresholds"].items()) {
      cfg.eval_iou_thresholds[key] = value.get<double>();
    }
  }
  const auto read_triplet = [&obj](const char* key, auto& target) {
    if (!obj.contains(key)) return;
    if (!obj[key].is_array() || obj[key].size() != 3) {
      throw ConfigError(std::string("config: eval.") + key +
                        " must be a 3-element array (easy, moderate, hard)");
    }
    for (std::size_t i = 0; i < 3; ++i) {
      target[i] = obj[key][i].get<typename std::decay_t<
          decltype(target)>::value_type>();
    }
  };
  read_triplet("min_height", cfg.difficulty.min_height);
  read_triplet("max_occlusion", cfg.difficulty.max_occlusion);
  read_triplet("max_truncation", cfg.difficulty.max_truncation);
}

void parse_io(const json& obj, FusionConfig& cfg) {
  require_keys(obj, "io", {"image_width", "image_height", "eps_depth"});
  cfg.image_width = get_int(obj, "image_width", cfg.image_width);
  cfg.image_height = get_int(obj, "image_height", cfg.image_height);
  cfg.eps_depth = get_number(obj, "eps_depth", cfg.eps_depth);
}

void check_unit(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw ConfigError(std::string("config: ") + name +
                      " must lie in [0, 1]");
  }
}

}  // namespace

bool FusionConfig::has_class(const std::string& label) const {
  return std::find(classes.begin(), classes.end(), label) != classes.end();
}

const AnchorDims& FusionConfig::anchor_for(const std::string& label) const {
  const auto it = anchors.find(label);
  if (it == anchors.end()) {
    throw ConfigError("config: no anchor dimensions for class \"" + label +
                      "\"");
  }
  return it->second;
}

std::vector<double> FusionConfig::iou_threshold_list() const {
  std::vector<double> out;
  out.reserve(classes.size());
  for (const std::string& label : classes) {
    const auto it = eval_iou_thresholds.find(label);
    if (it == eval_iou_thresholds.end()) {
      throw ConfigError("config: no eval IoU threshold for class \"" + label +
                        "\"");
    }
    out.push_back(it->second);
  }
  return out;
}

void validate_config(const FusionConfig& cfg) {
  check_unit(cfg.tau_b, "matching.tau_b");
  check_unit(cfg.tau_r, "recovery.tau_r");
  check_unit(cfg.lidar_score_thr, "matching.lidar_score_threshold");
  check_unit(cfg.lidar_nms_iou, "matching.lidar_nms_iou");
  check_unit(cfg.rgb_score_thr, "matching.rgb_score_threshold");
  if (!(cfg.enlargement >= 0.0)) {
    throw ConfigError("config: recovery.enlargement must be >= 0");
  }
  if (cfg.p_min < 0) {
    throw ConfigError("config: recovery.p_min must be >= 0");
  }
  if (!(cfg.d_max > 0.0)) {
    throw ConfigError("config: recovery.d_max must be > 0");
  }
  if (!(cfg.external_timeout_s > 0.0)) {
    throw ConfigError("config: recovery.external_timeout_s must be > 0");
  }
  if (cfg.localizer != "geometric" &&
      !(cfg.localizer.rfind("external:", 0) == 0 &&
        cfg.localizer.size() > 9)) {
    throw ConfigError(
        "config: recovery.localizer must be \"geometric\" or "
        "\"external:<dir>\"");
  }
  if (cfg.classes.size() < 2) {
    throw ConfigError("config: at least two classes are required");
  }
  std::set<std::string> unique(cfg.classes.begin(), cfg.classes.end());
  if (unique.size() != cfg.classes.size()) {
    throw ConfigError("config: duplicate class names");
  }
  for (const std::string& label : cfg.classes) {
    const auto it = cfg.anchors.find(label);
    if (it == cfg.anchors.end()) {
      throw ConfigError("config: missing anchor for class \"" + label + "\"");
    }
    const AnchorDims& a = it->second;
    if (!(a.length > 0.0 && a.height > 0.0 && a.width > 0.0)) {
      throw ConfigError("config: anchor dims for \"" + label +
                        "\" must be positive");
    }
    const auto thr_it = cfg.eval_iou_thresholds.find(label);
    if (thr_it == cfg.eval_iou_thresholds.end()) {
      throw ConfigError("config: missing eval IoU threshold for class \"" +
                        label + "\"");
    }
    if (!(thr_it->second > 0.0 && thr_it->second <= 1.0)) {
      throw ConfigError("config: eval IoU threshold for \"" + label +
                        "\" must lie in (0, 1]");
    }
  }
  if (cfg.prior_mode == PriorMode::Frequency) {
    for (const std::string& label : cfg.classes) {
      const auto it = cfg.class_priors.find(label);
      if (it == cfg.class_priors.end() || !(it->second > 0.0)) {
        throw ConfigError("config: frequency prior needs a positive weight "
                          "for class \"" +
                          label + "\"");
      }
    }
  }
  for (std::size_t i = 0; i < 3; ++i) {
    if (!(cfg.difficulty.min_height[i] >= 0.0) ||
        cfg.difficulty.max_occlusion[i] < 0 ||
        !(cfg.difficulty.max_truncation[i] >= 0.0 &&
          cfg.difficulty.max_truncation[i] <= 1.0)) {
      throw ConfigError("config: eval difficulty thresholds out of range");
    }
  }
  if (cfg.image_width <= 0 || cfg.image_height <= 0) {
    throw ConfigError("config: io.image_width/io.image_height must be > 0");
  }
  if (!(cfg.eps_depth > 0.0)) {
    throw ConfigError("config: io.eps_depth must be > 0");
  }
}

FusionConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  if (!root.is_object()) {
    throw ConfigError("config: top level must be an object");
  }
  require_keys(root, "top level",
               {"matching", "recovery", "fusion", "classes", "eval", "io"});

  FusionConfig cfg;
  try {
    if (root.contains("matching")) parse_matching(root["matching"], cfg);
    if (root.contains("recovery")) parse_recovery(root["recovery"], cfg);
    if (root.contains("fusion")) parse_fusion(root["fusion"], cfg);
    if (root.contains("classes")) parse_classes(root["classes"], cfg);
    if (root.contains("eval")) parse_eval(root["eval"], cfg);
    if (root.contains("io")) parse_io(root["io"], cfg);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  validate_config(cfg);
  return cfg;
}

FusionConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("config: cannot open " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

}  // namespace lcf
