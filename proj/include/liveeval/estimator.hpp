#pragma once
#include <filesystem>
#include <string>
#include <vector>

#include "liveeval/eval_store.hpp"
#include "liveeval/rasch.hpp"

namespace liveeval {

enum class Provenance { observed, estimated };
const char* to_string(Provenance p);

struct ScoreEntry {
    std::string model;
    int version = 0;
    double score = 0.0;  // fraction in [0,1]
    Provenance provenance = Provenance::observed;
};

// One entry per model in I_t, sorted descending by score, ties by model id.
struct Leaderboard {
    int version = 0;
    std::vector<ScoreEntry> entries;
};

// Mean of σ(θ̂ − β̂_j) over the sample set: the expected accuracy under the
// fitted model. Invariant under permutation of `samples` (bit-exact: the β̂
// values are summed in sorted order).
double estimate_score(const std::string& model,
                      const std::vector<std::string>& samples,
                      const RaschFit& fit);
// Same, over J_t of a store version.
double estimate_score(const EvalStore& store, const std::string& model, int t,
                      const RaschFit& fit);

// Version t must be sealed and the fit must cover I_t and J_t. Models in Î_t
// get their observed score; everyone else gets the estimate.
Leaderboard build_leaderboard(const EvalStore& store, int t,
                              const RaschFit& fit);

struct ErrorStats {
    double mae_points = 0.0;  // mean |predicted − actual|, ×100
    double mad_points = 0.0;  // mean | |predicted−actual| − mae |, ×100
};
ErrorStats mean_absolute_error(const std::vector<double>& predicted,
                               const std::vector<double>& actual);

// Pearson correlation of average-rank vectors. Errors on length mismatch,
// n < 2, or a constant input (undefined correlation).
double spearman_rank_correlation(const std::vector<double>& x,
                                 const std::vector<double>& y);

// `model_id,score_percent,provenance` with header; percent printed to one
// decimal.
void write_leaderboard_csv(const Leaderboard& board,
                           const std::filesystem::path& path);
std::string format_leaderboard_table(const Leaderboard& board);

}  // namespace liveeval
