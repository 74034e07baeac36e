#pragma once
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "liveeval/eval_store.hpp"
#include "liveeval/rasch.hpp"

namespace liveeval {

struct CostHint {
    std::string model;
    double relative_cost = 1.0;  // arbitrary units; must be positive
};

// Which previously-seen models to re-run on the next benchmark version.
struct ReevalPlan {
    int version = 0;  // the version being planned (t)
    int budget = 0;   // m_t
    std::vector<std::string> anchors;        // from J_{t−1}, sorted by β̂ then id
    std::vector<std::string> chosen_models;  // distinct, in per-anchor order
    std::vector<std::string> forced_new_models;  // sorted
};

// Anchor samples at the percentiles 5 + k·90/(m−1), k = 0..m−1 (just the
// 50th for m = 1). The q-th percentile is linear interpolation between order
// statistics at zero-based rank q/100·(n−1); each target takes the sample
// with the nearest β (lower id on distance ties), stepping to the
// next-nearest when a sample is already taken. Result is sorted by (β, id).
std::vector<std::string> select_anchor_samples(
    const std::vector<std::pair<std::string, double>>& difficulties,
    int budget);

// p(1−p) at p = σ(θ−β): how much one observation at this pairing narrows the
// parameters. Peaks at 0.25 when θ = β.
double fisher_information(double theta, double beta);

inline constexpr double kDefaultSimilarityEpsilon = 0.005;

// Greedy per anchor: among candidates not yet chosen, every model whose
// Fisher information is within similarity_epsilon of the best is eligible,
// and the cheapest (then lexicographically first) eligible one is taken.
// Models without a cost hint cost 1.0. Stops early if candidates run out.
std::vector<std::string> select_models(
    const RaschFit& fit, const std::vector<std::string>& anchors,
    const std::vector<std::string>& candidates,
    const std::vector<CostHint>& costs = {},
    double similarity_epsilon = kDefaultSimilarityEpsilon);

// Plan version t = store.num_versions(): anchors from J_{t−1} difficulties,
// candidates = I_{t−1} ∩ available. Requires version t−1 sealed and a fit
// covering J_{t−1} and the candidates.
ReevalPlan plan_reevaluation(const EvalStore& store, const RaschFit& fit,
                             int budget,
                             const std::vector<std::string>& new_models,
                             const std::vector<std::string>& available,
                             const std::vector<CostHint>& costs = {},
                             double similarity_epsilon = kDefaultSimilarityEpsilon);

void save_plan(const ReevalPlan& plan, const std::filesystem::path& path);
ReevalPlan load_plan(const std::filesystem::path& path);

}  // namespace liveeval
