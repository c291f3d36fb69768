#pragma once

#include <string>
#include <vector>

#include "lcfusion/box_matching.hpp"
#include "lcfusion/config.hpp"
#include "lcfusion/detection_recovery.hpp"

namespace lcf {

/// Per-class probabilities aligned with the configured class list.
/// Entries are nonnegative and sum to 1.
struct ClassDistribution {
  std::vector<double> p;
};

/// The fused 3D detection: box with reconciled score and label.
struct FusedDetection {
  Box3D box;
  double score = 0.0;
  std::string label;
};

ClassDistribution uniform_distribution(std::size_t n_classes);

/// Expands a scalar detector score into a distribution: p(label) = s, the
/// remaining mass spread uniformly over the other classes.
ClassDistribution score_to_distribution(double score, const std::string& label,
                                        const std::vector<std::string>& classes);

/// Independent-modality ensemble p(y) proportional to
/// prod_i p_i(y) / prior(y)^(L-1), normalized. Throws DataError when the
/// product vanishes for every class (contradictory inputs).
ClassDistribution probabilistic_ensemble(
    const std::vector<ClassDistribution>& dists,
    const ClassDistribution& prior);

/// Reconciles labels and scores over the matched and recovered sets: each
/// detection takes the label of its most confident RGB match and the
/// matching component of the ensemble over its per-modality distributions.
std::vector<FusedDetection> fuse_semantics(
    const MatchSet& matches, const std::vector<RecoveredPair>& recovered,
    const FusionConfig& cfg);

}  // namespace lcf
