#include "liveeval/planner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "liveeval/error.hpp"
#include "liveeval/kernels.hpp"

namespace liveeval {

std::vector<std::string> select_anchor_samples(
    const std::vector<std::pair<std::string, double>>& difficulties,
    int budget) {
    if (budget < 1) fail("budget must be at least 1");
    const std::size_t n = difficulties.size();
    if (static_cast<std::size_t>(budget) > n)
        fail("budget " + std::to_string(budget) + " exceeds sample count " +
             std::to_string(n));
    for (const auto& [id, beta] : difficulties)
        if (!std::isfinite(beta))
            fail("non-finite difficulty for sample '" + id + "'");

    std::vector<std::pair<double, std::string>> items;  // (β, id) ascending
    items.reserve(n);
    for (const auto& [id, beta] : difficulties) items.emplace_back(beta, id);
    std::sort(items.begin(), items.end());
    for (std::size_t k = 1; k < n; ++k)
        if (items[k].second == items[k - 1].second)
            fail("duplicate sample id '" + items[k].second + "'");

    std::vector<char> used(n, 0);
    std::vector<std::size_t> picked;
    for (int k = 0; k < budget; ++k) {
        double pct = budget == 1
                         ? 50.0
                         : 5.0 + static_cast<double>(k) * 90.0 /
                                     static_cast<double>(budget - 1);
        double r = pct * static_cast<double>(n - 1) / 100.0;
        auto lo = static_cast<std::size_t>(r);
        double frac = r - static_cast<double>(lo);
        double q = items[lo].first;
        if (lo + 1 < n) q += frac * (items[lo + 1].first - items[lo].first);

        std::size_t best = n;
        double best_dist = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            if (used[i]) continue;
            double dist = std::abs(items[i].first - q);
            if (dist < best_dist ||
                (dist == best_dist && items[i].second < items[best].second)) {
                best = i;
                best_dist = dist;
            }
        }
        used[best] = 1;
        picked.push_back(best);
    }
    std::sort(picked.begin(), picked.end());  // items order = (β, id) order
    std::vector<std::string> anchors;
    anchors.reserve(picked.size());
    for (std::size_t i : picked) anchors.push_back(items[i].second);
    return anchors;
}

double fisher_information(double theta, double beta) {
    if (!std::isfinite(theta) || !std::isfinite(beta))
        fail("fisher_information requires finite parameters");
    double p = kernels::sigmoid1(theta - beta);
    return p * (1.0 - p);
}

std::vector<std::string> select_models(const RaschFit& fit,
                                       const std::vector<std::string>& anchors,
                                       const std::vector<std::string>& candidates,
                                       const std::vector<CostHint>& costs,
                                       double similarity_epsilon) {
    if (candidates.empty()) fail("no candidates to choose from");
    if (!(similarity_epsilon >= 0.0) || !std::isfinite(similarity_epsilon))
        fail("similarity_epsilon must be non-negative");
    std::vector<std::string> pool = candidates;
    std::sort(pool.begin(), pool.end());
    auto dup = std::adjacent_find(pool.begin(), pool.end());
    if (dup != pool.end()) fail("duplicate candidate '" + *dup + "'");

    std::unordered_map<std::string, double> cost_of;
    for (const auto& c : costs) {
        if (!(c.relative_cost > 0.0) || !std::isfinite(c.relative_cost))
            fail("relative_cost for '" + c.model + "' must be positive");
        if (!cost_of.emplace(c.model, c.relative_cost).second)
            fail("duplicate cost hint for '" + c.model + "'");
    }
    auto cost = [&](const std::string& m) {
        auto it = cost_of.find(m);
        return it == cost_of.end() ? 1.0 : it->second;
    };

    std::vector<double> theta(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i)
        theta[i] = fit.ability(pool[i]);  // errors on uncovered candidate

    std::vector<char> chosen(pool.size(), 0);
    std::vector<std::string> result;
    for (const auto& anchor : anchors) {
        double beta = fit.difficulty(anchor);
        double fmax = -1.0;
        for (std::size_t i = 0; i < pool.size(); ++i)
            if (!chosen[i])
                fmax = std::max(fmax, fisher_information(theta[i], beta));
        if (fmax < 0.0) break;  // candidates exhausted
        // Everything within ε of the best is "equally informative"; pick the
        // cheapest of those, lexicographic id as the final tie-break.
        std::size_t best = pool.size();
        for (std::size_t i = 0; i < pool.size(); ++i) {
            if (chosen[i]) continue;
            if (fisher_information(theta[i], beta) < fmax - similarity_epsilon)
                continue;
            if (best == pool.size() || cost(pool[i]) < cost(pool[best]))
                best = i;  // pool is sorted, so first-seen wins cost ties
        }
        chosen[best] = 1;
        result.push_back(pool[best]);
    }
    return result;
}

ReevalPlan plan_reevaluation(const EvalStore& store, const RaschFit& fit,
                             int budget,
                             const std::vector<std::string>& new_models,
                             const std::vector<std::string>& available,
                             const std::vector<CostHint>& costs,
                             double similarity_epsilon) {
    if (budget < 1) fail("budget must be at least 1");
    if (store.num_versions() == 0) fail("no sealed prior version to plan from");
    int prev = store.num_versions() - 1;
    if (!store.is_sealed(prev))
        fail("version " + std::to_string(prev) + " is not sealed (" +
             std::to_string(store.missing_pairs(prev)) + " outcomes missing)");
    const BenchmarkVersion& v = store.version(prev);

    std::unordered_set<std::string> roster(v.roster.begin(), v.roster.end());
    for (const auto& m : new_models)
        if (roster.count(m)) fail("model '" + m + "' is already in the roster");

    std::unordered_set<std::string> avail(available.begin(), available.end());
    std::vector<std::string> candidates;
    for (const auto& m : v.roster)
        if (avail.count(m)) candidates.push_back(m);
    if (candidates.empty()) fail("no available candidates");

    std::vector<std::pair<std::string, double>> difficulties;
    difficulties.reserve(v.samples.size());
    for (const auto& s : v.samples)
        difficulties.emplace_back(s, fit.difficulty(s));

    ReevalPlan plan;
    plan.version = store.num_versions();
    plan.budget = budget;
    plan.anchors = select_anchor_samples(difficulties, budget);
    plan.chosen_models =
        select_models(fit, plan.anchors, candidates, costs, similarity_epsilon);
    plan.forced_new_models = new_models;
    std::sort(plan.forced_new_models.begin(), plan.forced_new_models.end());
    plan.forced_new_models.erase(std::unique(plan.forced_new_models.begin(),
                                             plan.forced_new_models.end()),
                                 plan.forced_new_models.end());
    return plan;
}

void save_plan(const ReevalPlan& plan, const std::filesystem::path& path) {
    nlohmann::json doc;
    doc["version"] = plan.version;
    doc["budget"] = plan.budget;
    doc["anchors"] = plan.anchors;
    doc["chosen_models"] = plan.chosen_models;
    doc["forced_new_models"] = plan.forced_new_models;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail("cannot write '" + path.string() + "'");
    out << doc.dump(2) << '\n';
    if (!out) fail("write failed for '" + path.string() + "'");
}

ReevalPlan load_plan(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("cannot open '" + path.string() + "'");
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        fail("failed to parse '" + path.string() + "': " + e.what());
    }
    ReevalPlan plan;
    try {
        plan.version = doc.at("version").get<int>();
        plan.budget = doc.at("budget").get<int>();
        plan.anchors = doc.at("anchors").get<std::vector<std::string>>();
        plan.chosen_models =
            doc.at("chosen_models").get<std::vector<std::string>>();
        plan.forced_new_models =
            doc.at("forced_new_models").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
        fail("malformed plan file '" + path.string() + "': " + e.what());
    }
    return plan;
}

}  // namespace liveeval
