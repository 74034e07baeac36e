#include "liveeval/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "liveeval/error.hpp"
#include "liveeval/kernels.hpp"

namespace liveeval {

const char* to_string(Provenance p) {
    return p == Provenance::observed ? "observed" : "estimated";
}

double estimate_score(const std::string& model,
                      const std::vector<std::string>& samples,
                      const RaschFit& fit) {
    if (samples.empty()) fail("cannot estimate a score over an empty sample set");
    double theta = fit.ability(model);
    std::vector<double> betas;
    betas.reserve(samples.size());
    for (const auto& s : samples) betas.push_back(fit.difficulty(s));
    // Summing in sorted-β order makes the result independent of how the
    // caller happened to order the samples.
    std::sort(betas.begin(), betas.end());
    double sum = 0.0;
    for (double b : betas) sum += kernels::sigmoid1(theta - b);
    return sum / static_cast<double>(samples.size());
}

double estimate_score(const EvalStore& store, const std::string& model, int t,
                      const RaschFit& fit) {
    return estimate_score(model, store.version(t).samples, fit);
}

Leaderboard build_leaderboard(const EvalStore& store, int t,
                              const RaschFit& fit) {
    const BenchmarkVersion& v = store.version(t);
    if (!store.is_sealed(t))
        fail("version " + std::to_string(t) + " is not sealed (" +
             std::to_string(store.missing_pairs(t)) + " outcomes missing)");
    for (const auto& s : v.samples)
        if (!fit.has_sample(s)) fail("no difficulty for sample '" + s + "'");
    std::unordered_set<std::string> evaluated(v.evaluated.begin(),
                                              v.evaluated.end());
    Leaderboard board;
    board.version = t;
    for (const auto& m : v.roster) {
        ScoreEntry e;
        e.model = m;
        e.version = t;
        if (evaluated.count(m)) {
            e.score = store.observed_score(m, t);
            e.provenance = Provenance::observed;
        } else {
            e.score = estimate_score(m, v.samples, fit);
            e.provenance = Provenance::estimated;
        }
        board.entries.push_back(std::move(e));
    }
    std::sort(board.entries.begin(), board.entries.end(),
              [](const ScoreEntry& a, const ScoreEntry& b) {
                  return a.score != b.score ? a.score > b.score
                                            : a.model < b.model;
              });
    return board;
}

ErrorStats mean_absolute_error(const std::vector<double>& predicted,
                               const std::vector<double>& actual) {
    if (predicted.size() != actual.size())
        fail("predicted and actual lengths differ");
    if (predicted.empty()) fail("cannot compute error of empty vectors");
    std::vector<double> abs_err(predicted.size());
    for (std::size_t k = 0; k < predicted.size(); ++k)
        abs_err[k] = std::abs(predicted[k] - actual[k]);
    double n = static_cast<double>(abs_err.size());
    double mae = std::accumulate(abs_err.begin(), abs_err.end(), 0.0) / n;
    double mad = 0.0;
    for (double e : abs_err) mad += std::abs(e - mae);
    mad /= n;
    return {mae * 100.0, mad * 100.0};
}

namespace {

// Average ranks (1-based); tied values share the mean of their positions.
std::vector<double> average_ranks(const std::vector<double>& x) {
    std::size_t n = x.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
        double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

double spearman_rank_correlation(const std::vector<double>& x,
                                 const std::vector<double>& y) {
    if (x.size() != y.size()) fail("rank correlation inputs differ in length");
    if (x.size() < 2) fail("rank correlation needs at least 2 points");
    for (double v : x)
        if (!std::isfinite(v)) fail("non-finite value in rank correlation input");
    for (double v : y)
        if (!std::isfinite(v)) fail("non-finite value in rank correlation input");
    std::vector<double> rx = average_ranks(x), ry = average_ranks(y);
    double n = static_cast<double>(x.size());
    double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
    double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t k = 0; k < rx.size(); ++k) {
        double dx = rx[k] - mx, dy = ry[k] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx == 0.0 || syy == 0.0)
        fail("undefined correlation: an input is constant");
    return sxy / std::sqrt(sxx * syy);
}

void write_leaderboard_csv(const Leaderboard& board,
                           const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail("cannot write '" + path.string() + "'");
    out << "model_id,score_percent,provenance\n";
    char buf[32];
    for (const auto& e : board.entries) {
        std::snprintf(buf, sizeof buf, "%.1f", e.score * 100.0);
        out << e.model << ',' << buf << ',' << to_string(e.provenance) << '\n';
    }
    if (!out) fail("write failed for '" + path.string() + "'");
}

std::string format_leaderboard_table(const Leaderboard& board) {
    std::size_t id_w = 8;
    for (const auto& e : board.entries) id_w = std::max(id_w, e.model.size());
    std::ostringstream out;
    out << "leaderboard for version " << board.version << "\n";
    out << "rank  " << std::left << std::setw(static_cast<int>(id_w))
        << "model_id" << "  score  provenance\n";
    char buf[32];
    int rank = 1;
    for (const auto& e : board.entries) {
        std::snprintf(buf, sizeof buf, "%5.1f", e.score * 100.0);
        out << std::right << std::setw(4) << rank++ << "  " << std::left
            << std::setw(static_cast<int>(id_w)) << e.model << "  " << buf
            << "  " << to_string(e.provenance) << "\n";
    }
    return out.str();
}

}  // namespace liveeval
