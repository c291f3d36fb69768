#include "lcfusion/semantic_fusion.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "lcfusion/errors.hpp"

namespace lcf {
namespace {

std::size_t class_index(const std::vector<std::string>& classes,
                        const std::string& label) {
  const auto it = std::find(classes.begin(), classes.end(), label);
  if (it == classes.end()) {
    throw DataError("semantic_fusion: label \"" + label +
                    "\" is not in the configured class set");
  }
  return static_cast<std::size_t>(it - classes.begin());
}

ClassDistribution make_prior(const FusionConfig& cfg) {
  if (cfg.prior_mode == PriorMode::Uniform) {
    return uniform_distribution(cfg.classes.size());
  }
  ClassDistribution prior;
  prior.p.reserve(cfg.classes.size());
  double total = 0.0;
  for (const std::string& label : cfg.classes) {
    total += cfg.class_priors.at(label);
  }
  for (const std::string& label : cfg.classes) {
    prior.p.push_back(cfg.class_priors.at(label) / total);
  }
  return prior;
}

// Ensemble component for the chosen label, falling back to the raw RGB
// score when the factors contradict each other outright (all-zero
// product, possible with saturated scores and disagreeing labels).
double fused_component(const std::vector<ClassDistribution>& factors,
                       const ClassDistribution& prior, std::size_t index,
                       double fallback) {
  try {
    return probabilistic_ensemble(factors, prior).p[index];
  } catch (const DataError&) {
    return fallback;
  }
}

}  // namespace

ClassDistribution uniform_distribution(std::size_t n_classes) {
  ClassDistribution dist;
  dist.p.assign(n_classes, 1.0 / static_cast<double>(n_classes));
  return dist;
}

ClassDistribution score_to_distribution(
    double score, const std::string& label,
    const std::vector<std::string>& classes) {
  if (classes.size() < 2) {
    throw ConfigError("score_to_distribution: need at least two classes");
  }
  const std::size_t index = class_index(classes, label);
  ClassDistribution dist;
  dist.p.assign(classes.size(),
                (1.0 - score) / static_cast<double>(classes.size() - 1));
  dist.p[index] = score;
  return dist;
}

ClassDistribution probabilistic_ensemble(
    const std::vector<ClassDistribution>& dists,
    const ClassDistribution& prior) {
  if (dists.empty()) {
    throw DataError("probabilistic_ensemble: no factors");
  }
  const std::size_t n = prior.p.size();
  for (const ClassDistribution& d : dists) {
    if (d.p.size() != n) {
      throw DataError("probabilistic_ensemble: factor size mismatch");
    }
  }
  const double exponent = static_cast<double>(dists.size()) - 1.0;
  ClassDistribution out;
  out.p.assign(n, 0.0);
  double total = 0.0;
  for (std::size_t y = 0; y < n; ++y) {
    if (!(prior.p[y] > 0.0)) {
      throw DataError("probabilistic_ensemble: prior must be positive");
    }
    double v = 1.0;
    for (const ClassDistribution& d : dists) v *= d.p[y];
    v /= std::pow(prior.p[y], exponent);
    out.p[y] = v;
    total += v;
  }
  if (!(total > 0.0)) {
    throw DataError("probabilistic_ensemble: degenerate ensemble");
  }
  for (double& v : out.p) v /= total;
  return out;
}

std::vector<FusedDetection> fuse_semantics(
    const MatchSet& matches, const std::vector<RecoveredPair>& recovered,
    const FusionConfig& cfg) {
  const ClassDistribution prior = make_prior(cfg);
  std::vector<FusedDetection> out;

  // Matches per surviving detection, collected across views in ViewId
  // order so tie-breaking is deterministic.
  std::map<int, std::vector<const Match2D3D*>> by_id;
  for (const auto& [view, view_matches] : matches.matched) {
    for (const Match2D3D& m : view_matches) by_id[m.det3d_id].push_back(&m);
  }

  for (const Detection3D& det : matches.surviving) {
    const auto it = by_id.find(det.id);
    if (it == by_id.end() || it->second.empty()) {
      throw DataError(
          "fuse_semantics: surviving detection has no matches (id " +
          std::to_string(det.id) + ")");
    }
    const Match2D3D* best = it->second.front();
    for (const Match2D3D* m : it->second) {
      if (m->det2d.score > best->det2d.score) best = m;
    }

    std::vector<ClassDistribution> factors;
    factors.push_back(score_to_distribution(det.score, det.label, cfg.classes));
    for (const Match2D3D* m : it->second) {
      factors.push_back(
          score_to_distribution(m->det2d.score, m->det2d.label, cfg.classes));
    }

    FusedDetection fused;
    fused.box = det.box;
    fused.label = best->det2d.label;
    fused.score =
        fused_component(factors, prior, class_index(cfg.classes, fused.label),
                        best->det2d.score);
    out.push_back(std::move(fused));
  }

  for (const RecoveredPair& rp : recovered) {
    std::vector<ClassDistribution> factors;
    factors.push_back(
        score_to_distribution(rp.score3d, rp.label3d, cfg.classes));
    factors.push_back(
        score_to_distribution(rp.left.score, rp.left.label, cfg.classes));
    factors.push_back(
        score_to_distribution(rp.right.score, rp.right.label, cfg.classes));

    const double rgb_best = std::max(rp.left.score, rp.right.score);
    FusedDetection fused;
    fused.box = rp.box;
    fused.label = rp.label3d;
    fused.score = fused_component(
        factors, prior, class_index(cfg.classes, fused.label), rgb_best);
    out.push_back(std::move(fused));
  }
  return out;
}

}  // namespace lcf
