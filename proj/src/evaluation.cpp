#include "lcfusion/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lcfusion/errors.hpp"

namespace lcf {
namespace {

using Vec2 = Eigen::Vector2d;

std::array<Vec2, 4> bev_polygon(const Box3D& box) {
  const double hl = 0.5 * box.length;
  const double hw = 0.5 * box.width;
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  const double xs[4] = {hl, -hl, -hl, hl};
  const double ys[4] = {hw, hw, -hw, -hw};
  std::array<Vec2, 4> poly;
  for (int i = 0; i < 4; ++i) {
    poly[static_cast<std::size_t>(i)] =
        Vec2(box.center.x() + c * xs[i] - s * ys[i],
             box.center.y() + s * xs[i] + c * ys[i]);
  }
  return poly;  // counterclockwise
}

double shoelace_area(const std::vector<Vec2>& poly) {
  if (poly.size() < 3) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2& p = poly[i];
    const Vec2& q = poly[(i + 1) % poly.size()];
    acc += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * std::abs(acc);
}

double edge_side(const Vec2& a, const Vec2& b, const Vec2& p) {
  return (b.x() - a.x()) * (p.y() - a.y()) - (b.y() - a.y()) * (p.x() - a.x());
}

// Sutherland-Hodgman clip of a convex subject against a counterclockwise
// convex clip polygon.
std::vector<Vec2> clip_convex(const std::array<Vec2, 4>& subject,
                              const std::array<Vec2, 4>& clip) {
  std::vector<Vec2> out(subject.begin(), subject.end());
  std::vector<Vec2> in;
  for (std::size_t e = 0; e < clip.size(); ++e) {
    const Vec2& a = clip[e];
    const Vec2& b = clip[(e + 1) % clip.size()];
    in.swap(out);
    out.clear();
    if (in.empty()) break;
    for (std::size_t i = 0; i < in.size(); ++i) {
      const Vec2& cur = in[i];
      const Vec2& nxt = in[(i + 1) % in.size()];
      const double dc = edge_side(a, b, cur);
      const double dn = edge_side(a, b, nxt);
      if (dc >= 0.0) {
        out.push_back(cur);
        if (dn < 0.0) out.push_back(cur + dc / (dc - dn) * (nxt - cur));
      } else if (dn >= 0.0) {
        out.push_back(cur + dc / (dc - dn) * (nxt - cur));
      }
    }
  }
  return out;
}

double bev_intersection_area(const Box3D& a, const Box3D& b) {
  return shoelace_area(clip_convex(bev_polygon(a), bev_polygon(b)));
}

double bev_area(const Box3D& box) {
  const auto poly = bev_polygon(box);
  return shoelace_area(std::vector<Vec2>(poly.begin(), poly.end()));
}

struct GtState {
  const GtAnnotation* gt = nullptr;
  bool relevant = false;   // counted in recall
  bool ignorable = false;  // absorbs matches silently
  bool matched = false;
};

double box_iou(const Box3D& a, const Box3D& b, IouMetric metric) {
  return metric == IouMetric::Bev ? rotated_bev_iou(a, b) : iou_3d(a, b);
}

double interpolated_precision(const std::vector<double>& recall,
                              const std::vector<double>& precision,
                              double at) {
  double best = 0.0;
  for (std::size_t k = 0; k < recall.size(); ++k) {
    if (recall[k] >= at) best = std::max(best, precision[k]);
  }
  return best;
}

}  // namespace

Difficulty assign_difficulty(const GtAnnotation& gt,
                             const DifficultyThresholds& thr) {
  const double height = gt.bbox.height();
  for (int d = 0; d < 3; ++d) {
    const auto i = static_cast<std::size_t>(d);
    if (height >= thr.min_height[i] && gt.occlusion <= thr.max_occlusion[i] &&
        gt.truncation <= thr.max_truncation[i]) {
      return static_cast<Difficulty>(d);
    }
  }
  return Difficulty::Ignored;
}

const char* difficulty_name(Difficulty d) {
  switch (d) {
    case Difficulty::Easy:
      return "easy";
    case Difficulty::Moderate:
      return "moderate";
    case Difficulty::Hard:
      return "hard";
    case Difficulty::Ignored:
      return "ignored";
  }
  return "?";
}

double rotated_bev_iou(const Box3D& a, const Box3D& b) {
  const double inter = bev_intersection_area(a, b);
  const double uni = bev_area(a) + bev_area(b) - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double iou_3d(const Box3D& a, const Box3D& b) {
  const double za0 = a.center.z() - 0.5 * a.height;
  const double za1 = a.center.z() + 0.5 * a.height;
  const double zb0 = b.center.z() - 0.5 * b.height;
  const double zb1 = b.center.z() + 0.5 * b.height;
  const double dz = std::min(za1, zb1) - std::max(za0, zb0);
  if (dz <= 0.0) return 0.0;
  const double inter = bev_intersection_area(a, b) * dz;
  const double uni = bev_area(a) * a.height + bev_area(b) * b.height - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

ApResult compute_ap(const std::vector<std::vector<Detection3D>>& dets,
                    const std::vector<std::vector<GtAnnotation>>& gts,
                    const std::string& label, Difficulty difficulty,
                    double iou_thr, IouMetric metric, ApInterpolation interp,
                    const DifficultyThresholds& thr) {
  if (dets.size() != gts.size()) {
    throw DataError("compute_ap: detection/ground-truth frame count mismatch");
  }
  if (difficulty == Difficulty::Ignored) {
    throw DataError("compute_ap: cannot evaluate the Ignored tier");
  }

  std::vector<std::vector<GtState>> states(gts.size());
  std::size_t n_gt = 0;
  for (std::size_t f = 0; f < gts.size(); ++f) {
    states[f].reserve(gts[f].size());
    for (const auto& gt : gts[f]) {
      GtState st;
      st.gt = &gt;
      if (gt.label == label) {
        const Difficulty tier = assign_difficulty(gt, thr);
        if (static_cast<int>(tier) <= static_cast<int>(difficulty)) {
          st.relevant = true;
          ++n_gt;
        } else {
          st.ignorable = true;
        }
      }
      states[f].push_back(st);
    }
  }

  ApResult result;
  if (n_gt == 0) return result;  // AP undefined without ground truth

  struct DetRef {
    double score;
    std::size_t frame;
    std::size_t index;
  };
  std::vector<DetRef> order;
  for (std::size_t f = 0; f < dets.size(); ++f) {
    for (std::size_t i = 0; i < dets[f].size(); ++i) {
      if (dets[f][i].label == label) order.push_back({dets[f][i].score, f, i});
    }
  }
  std::sort(order.begin(), order.end(), [](const DetRef& a, const DetRef& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.frame != b.frame) return a.frame < b.frame;
    return a.index < b.index;
  });

  std::vector<double> recall, precision;
  std::vector<double> scores;
  std::size_t tp = 0, fp = 0;
  for (const auto& ref : order) {
    const Detection3D& det = dets[ref.frame][ref.index];
    auto& frame_states = states[ref.frame];

    int best_relevant = -1, best_ignorable = -1;
    double best_rel_iou = iou_thr, best_ign_iou = iou_thr;
    for (std::size_t g = 0; g < frame_states.size(); ++g) {
      GtState& st = frame_states[g];
      if (st.matched || (!st.relevant && !st.ignorable)) continue;
      const double iou = box_iou(det.box, st.gt->box, metric);
      if (st.relevant && iou >= best_rel_iou &&
          (best_relevant < 0 || iou > best_rel_iou)) {
        best_rel_iou = iou;
        best_relevant = static_cast<int>(g);
      } else if (st.ignorable && iou >= best_ign_iou &&
                 (best_ignorable < 0 || iou > best_ign_iou)) {
        best_ign_iou = iou;
        best_ignorable = static_cast<int>(g);
      }
    }

    if (best_relevant >= 0) {
      frame_states[static_cast<std::size_t>(best_relevant)].matched = true;
      ++tp;
    } else if (best_ignorable >= 0) {
      // Absorbed by a harder-tier ground truth: neither TP nor FP.
      frame_states[static_cast<std::size_t>(best_ignorable)].matched = true;
      continue;
    } else {
      ++fp;
    }
    recall.push_back(static_cast<double>(tp) / static_cast<double>(n_gt));
    precision.push_back(static_cast<double>(tp) /
                        static_cast<double>(tp + fp));
    scores.push_back(det.score);
  }

  for (std::size_t k = 0; k < recall.size(); ++k) {
    result.curve.push_back({scores[k], recall[k], precision[k]});
  }

  double acc = 0.0;
  if (interp == ApInterpolation::R40) {
    for (int i = 1; i <= 40; ++i) {
      acc += interpolated_precision(recall, precision, i / 40.0);
    }
    result.ap = acc / 40.0;
  } else {
    for (int i = 0; i <= 10; ++i) {
      acc += interpolated_precision(recall, precision, i / 10.0);
    }
    result.ap = acc / 11.0;
  }
  return result;
}

EvalReport evaluate_detections(
    const std::vector<std::vector<Detection3D>>& dets,
    const std::vector<std::vector<GtAnnotation>>& gts,
    const std::vector<std::string>& labels,
    const std::vector<double>& iou_thresholds, ApInterpolation interp,
    const DifficultyThresholds& thr) {
  if (labels.size() != iou_thresholds.size()) {
    throw ConfigError("evaluate_detections: one IoU threshold per class");
  }
  EvalReport report;
  for (std::size_t c = 0; c < labels.size(); ++c) {
    for (const IouMetric metric : {IouMetric::Iou3D, IouMetric::Bev}) {
      for (const Difficulty d :
           {Difficulty::Easy, Difficulty::Moderate, Difficulty::Hard}) {
        EvalEntry entry;
        entry.label = labels[c];
        entry.difficulty = d;
        entry.metric = metric;
        entry.result = compute_ap(dets, gts, labels[c], d, iou_thresholds[c],
                                  metric, interp, thr);
        report.entries.push_back(std::move(entry));
      }
    }
  }
  return report;
}

std::string eval_report_table(const EvalReport& report) {
  std::ostringstream os;
  os << "class\tmetric\teasy\tmoderate\thard\n";
  // Entries arrive grouped by class and metric, three difficulties each.
  for (std::size_t i = 0; i + 2 < report.entries.size(); i += 3) {
    const EvalEntry& e = report.entries[i];
    os << e.label << '\t'
       << (e.metric == IouMetric::Iou3D ? "ap_3d" : "ap_bev");
    for (std::size_t k = 0; k < 3; ++k) {
      const auto& ap = report.entries[i + k].result.ap;
      os << '\t';
      if (ap) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%.4f", *ap);
        os << buf;
      } else {
        os << "n/a";
      }
    }
    os << '\n';
  }
  return os.str();
}

std::string eval_report_json(const EvalReport& report) {
  nlohmann::json root = nlohmann::json::object();
  for (const EvalEntry& e : report.entries) {
    nlohmann::json entry;
    if (e.result.ap) {
      entry["ap"] = *e.result.ap;
    } else {
      entry["ap"] = nullptr;
    }
    nlohmann::json curve = nlohmann::json::array();
    for (const PrPoint& p : e.result.curve) {
      curve.push_back({{"score", p.score},
                       {"recall", p.recall},
                       {"precision", p.precision}});
    }
    entry["curve"] = std::move(curve);
    const std::string metric = e.metric == IouMetric::Iou3D ? "3d" : "bev";
    root[e.label][metric][difficulty_name(e.difficulty)] = std::move(entry);
  }
  return root.dump(2);
}

}  // namespace lcf
