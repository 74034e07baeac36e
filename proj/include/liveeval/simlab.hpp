#pragma once
#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "liveeval/eval_store.hpp"
#include "liveeval/planner.hpp"
#include "liveeval/rasch.hpp"

namespace liveeval {

struct WorldConfig {
    int num_models = 17;
    int num_domains = 10;
    int samples_per_domain = 700;
    double theta_mean = 0.0;
    double theta_sd = 1.2;  // spreads synthetic accuracies over roughly 20–80%
    double beta_mean = 0.0;
    double beta_sd = 1.0;
    std::uint64_t seed = 1;
};

// A fully-known population: latent parameters plus one realized outcome for
// every (model, sample) pair. Samples are listed in chronological order,
// domain-major. Reproducible from the config alone.
struct SimWorld {
    WorldConfig config;
    std::vector<std::string> model_ids;  // m00..,
    std::vector<double> true_theta;      // parallel to model_ids
    std::vector<std::string> domain_ids;  // d00..
    std::vector<std::string> sample_ids;  // chronological (= generation) order
    std::vector<int> sample_domain;       // index into domain_ids
    std::vector<double> true_beta;        // parallel to sample_ids
    std::vector<std::uint8_t> outcomes;   // [model * num_samples + sample]
    std::unordered_map<std::string, int> sample_index;

    int num_models() const { return static_cast<int>(model_ids.size()); }
    int num_samples() const { return static_cast<int>(sample_ids.size()); }
    int outcome(int model, int sample) const {
        return outcomes[static_cast<std::size_t>(model) *
                            static_cast<std::size_t>(num_samples()) +
                        static_cast<std::size_t>(sample)];
    }
    // Realized mean correctness over the given sample positions.
    double realized_accuracy(int model, const std::vector<int>& samples) const;
};

SimWorld generate_world(const WorldConfig& config);

// Per domain, the earliest ⌈train_fraction·n⌉ samples form the train side.
// Both halves come back as sample positions in chronological order.
struct ChronologicalSplit {
    std::vector<int> train;
    std::vector<int> test;
};
ChronologicalSplit chronological_split(const SimWorld& world,
                                       double train_fraction = 0.15);

struct DomainError {
    std::string domain;
    double mae_points = 0.0;
    double mad_points = 0.0;
};

struct ExperimentResult {
    std::vector<DomainError> per_domain;  // one row per domain
    double overall_mae_points = 0.0;
    double overall_mad_points = 0.0;
    double spearman = 0.0;  // over all models: observed|estimated vs realized
    int budget = 0;
    std::uint64_t seed = 0;
    std::vector<std::string> reevaluated;  // Î_1
    int test_model_count = 0;              // models scored by estimation only
    bool degenerate = false;  // budget covered everyone; MAE vacuous
    long long evaluations_performed = 0;  // |Î_1| · |J_1|
    long long baseline_evaluations = 0;   // |I| · |J_1|
};

struct EfficientEvalOptions {
    double train_fraction = 0.15;
    FitConfig fit;
    std::vector<CostHint> costs;
    double similarity_epsilon = kDefaultSimilarityEpsilon;
};

// The full maintenance protocol on a synthetic world: version 0 = train split
// with everyone evaluated, version 1 = test split with only the planner's pick
// re-evaluated; everyone else is estimated from the fit and compared to
// their realized accuracy.
ExperimentResult run_efficient_eval(const SimWorld& world, int budget,
                                    const EfficientEvalOptions& options = {});

// Same pipeline with a caller-chosen re-evaluation set instead of the
// planner's (for baselines, e.g. random selection).
ExperimentResult run_with_reeval_set(const SimWorld& world,
                                     const std::vector<std::string>& reevaluated,
                                     const EfficientEvalOptions& options = {});

std::vector<ExperimentResult> budget_sweep(const SimWorld& world,
                                           const std::vector<int>& budgets,
                                           const EfficientEvalOptions& options = {});

struct SampleSizeResult {
    int size = 0;
    double mae_points = 0.0;
};
// Reruns the version-1 stage on seeded subsamples of the test split. A size
// equal to the full test split reproduces run_efficient_eval exactly.
std::vector<SampleSizeResult> sample_size_study(
    const SimWorld& world, const std::vector<int>& test_sizes, int budget,
    const EfficientEvalOptions& options = {});

// Outcome-format file → store with every version sealed (errors otherwise).
EvalStore ingest_external_matrix(const std::filesystem::path& path);

// Flat table: `domain,mae_points,mad_points` rows then
// `overall,<mae>,<spearman>`.
std::string format_experiment_table(const ExperimentResult& result);

}  // namespace liveeval
