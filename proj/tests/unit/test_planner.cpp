#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "doctest.h"
#include "liveeval/error.hpp"
#include "liveeval/planner.hpp"
#include "liveeval/rng.hpp"

using namespace liveeval;
namespace fs = std::filesystem;

namespace {

std::vector<std::pair<std::string, double>> ladder(int n, double lo, double hi) {
    std::vector<std::pair<std::string, double>> out;
    for (int i = 0; i < n; ++i) {
        char id[16];
        std::snprintf(id, sizeof id, "q%02d", i);
        out.emplace_back(id, lo + (hi - lo) * i / (n - 1));
    }
    return out;
}

RaschFit fit_with(std::vector<std::pair<std::string, double>> models,
                  std::vector<std::pair<std::string, double>> samples) {
    std::sort(models.begin(), models.end());
    std::sort(samples.begin(), samples.end());
    RaschFit f;
    for (auto& [id, v] : models) {
        f.model_ids.push_back(id);
        f.abilities.push_back(v);
    }
    for (auto& [id, v] : samples) {
        f.sample_ids.push_back(id);
        f.difficulties.push_back(v);
    }
    return f;
}

}  // namespace

TEST_CASE("anchor selection: median for budget 1, ends plus middle for 3") {
    CHECK(select_anchor_samples({{"a", 1.0}, {"b", 2.0}, {"c", 3.0}}, 1) ==
          std::vector<std::string>{"b"});

    auto a3 = select_anchor_samples(ladder(5, 0.0, 4.0), 3);
    CHECK(a3 == std::vector<std::string>{"q00", "q02", "q04"});
}

TEST_CASE("anchor selection: budget 5 over an even 100-rung ladder") {
    // Difficulty k/100 for k = 0..99; the evenly spaced quantile targets land
    // on the 5th, 27th, 49th, 72nd and 94th order statistics.
    auto anchors = select_anchor_samples(ladder(100, 0.0, 0.99), 5);
    CHECK(anchors ==
          std::vector<std::string>{"q05", "q27", "q49", "q72", "q94"});
}

TEST_CASE("anchor selection oracle: nearest order statistic by (distance, id)") {
    // Independent replay of the documented rule on irregular difficulties.
    std::vector<std::pair<std::string, double>> diffs = {
        {"s1", -2.3}, {"s2", -0.4}, {"s3", -0.4}, {"s4", 0.1},
        {"s5", 0.9},  {"s6", 1.7},  {"s7", 3.0}};
    const int budget = 4;
    auto got = select_anchor_samples(diffs, budget);

    std::vector<std::pair<double, std::string>> items;
    for (auto& [id, b] : diffs) items.emplace_back(b, id);
    std::sort(items.begin(), items.end());
    std::vector<bool> used(items.size(), false);
    std::vector<std::string> expect;
    for (int k = 0; k < budget; ++k) {
        double pct = 5.0 + k * 90.0 / (budget - 1);
        double r = pct * (items.size() - 1) / 100.0;
        std::size_t lo = static_cast<std::size_t>(r);
        double q = items[lo].first;
        if (lo + 1 < items.size())
            q += (r - lo) * (items[lo + 1].first - items[lo].first);
        std::size_t best = items.size();
        double bd = 1e300;
        for (std::size_t i = 0; i < items.size(); ++i) {
            if (used[i]) continue;
            double d = std::abs(items[i].first - q);
            if (d < bd || (d == bd && items[i].second < items[best].second)) {
                best = i;
                bd = d;
            }
        }
        used[best] = true;
        expect.push_back(items[best].second);
    }
    std::sort(expect.begin(), expect.end(),
              [&](const std::string& a, const std::string& b) {
                  double ba = 0, bb = 0;
                  for (auto& [id, v] : diffs) {
                      if (id == a) ba = v;
                      if (id == b) bb = v;
                  }
                  return ba != bb ? ba < bb : a < b;
              });
    CHECK(got == expect);
}

TEST_CASE("anchor selection never repeats a sample when difficulties tie") {
    auto anchors = select_anchor_samples(
        {{"a", 0.0}, {"b", 0.0}, {"c", 0.0}, {"d", 5.0}}, 3);
    CHECK(anchors == std::vector<std::string>{"a", "b", "d"});
    std::sort(anchors.begin(), anchors.end());
    CHECK(std::adjacent_find(anchors.begin(), anchors.end()) == anchors.end());
}

TEST_CASE("anchor selection input validation") {
    CHECK_THROWS_AS(select_anchor_samples({{"a", 1.0}}, 0), Error);
    CHECK_THROWS_AS(select_anchor_samples({{"a", 1.0}}, 2), Error);
    CHECK_THROWS_AS(select_anchor_samples({{"a", 1.0}, {"a", 2.0}}, 1), Error);
    CHECK_THROWS_AS(select_anchor_samples({{"a", std::nan("")}}, 1), Error);
}

TEST_CASE("fisher information peaks where ability meets difficulty") {
    CHECK(fisher_information(1.3, 1.3) == 0.25);
    CHECK(fisher_information(0.0, 2.0) ==
          doctest::Approx(fisher_information(2.0, 0.0)).epsilon(1e-12));

    double prev = 0.25;
    for (double d = 0.25; d <= 6.0; d += 0.25) {
        double f = fisher_information(0.0, d);
        CHECK(f < prev);
        prev = f;
    }

    // Against a fixed anchor set, the most informative anchor for a model is
    // always the nearest difficulty.
    std::vector<double> betas = {-2.0, -0.7, 0.1, 1.4, 2.9};
    Pcg32 g(808);
    for (int trial = 0; trial < 100; ++trial) {
        double theta = 8.0 * g.next_double() - 4.0;
        std::size_t best_f = 0, best_d = 0;
        for (std::size_t j = 1; j < betas.size(); ++j) {
            if (fisher_information(theta, betas[j]) >
                fisher_information(theta, betas[best_f]))
                best_f = j;
            if (std::abs(theta - betas[j]) < std::abs(theta - betas[best_d]))
                best_d = j;
        }
        CHECK(best_f == best_d);
    }
}

TEST_CASE("model selection pairs each anchor with its best-matched model") {
    auto f = fit_with({{"m1", -1.0}, {"m2", 0.0}, {"m3", 1.0}},
                      {{"e", -1.0}, {"h", 1.0}});
    CHECK(select_models(f, {"e", "h"}, {"m1", "m2", "m3"}) ==
          std::vector<std::string>{"m1", "m3"});
    // Output order follows the anchor order, not the id order.
    CHECK(select_models(f, {"h", "e"}, {"m1", "m2", "m3"}) ==
          std::vector<std::string>{"m3", "m1"});
}

TEST_CASE("model selection: no repeats, exhaustion stops early") {
    auto f = fit_with({{"m1", -1.0}, {"m2", 3.0}},
                      {{"a1", -1.0}, {"a2", -0.9}, {"a3", -0.8}});
    // m1 dominates every anchor but can only be picked once.
    CHECK(select_models(f, {"a1", "a2"}, {"m1", "m2"}) ==
          std::vector<std::string>{"m1", "m2"});
    CHECK(select_models(f, {"a1", "a2", "a3"}, {"m1", "m2"}) ==
          std::vector<std::string>{"m1", "m2"});
}

TEST_CASE("near-ties fall back to cost, then to id") {
    // Two abilities straddling the anchor: the information gap is far below
    // the similarity threshold, so both are eligible.
    auto f = fit_with({{"ma", 0.0}, {"mb", 0.002}}, {{"x", 0.001}});
    CHECK(select_models(f, {"x"}, {"ma", "mb"}) ==
          std::vector<std::string>{"ma"});  // equal cost → smaller id
    CHECK(select_models(f, {"x"}, {"ma", "mb"}, {{"ma", 2.0}, {"mb", 1.0}}) ==
          std::vector<std::string>{"mb"});  // cheaper wins
    CHECK(select_models(f, {"x"}, {"ma", "mb"}, {{"ma", 1.0}, {"mb", 1.0}}) ==
          std::vector<std::string>{"ma"});  // explicit equal costs → id again

    // A model far outside the eligible band cannot buy its way in.
    auto g = fit_with({{"ma", 0.0}, {"mc", 3.0}}, {{"x", 0.0}});
    CHECK(select_models(g, {"x"}, {"ma", "mc"}, {{"mc", 0.01}}) ==
          std::vector<std::string>{"ma"});

    // A wider epsilon widens the band.
    CHECK(select_models(g, {"x"}, {"ma", "mc"}, {{"mc", 0.01}}, 0.3) ==
          std::vector<std::string>{"mc"});
}

TEST_CASE("model selection agrees with an independent replay of its rule") {
    Pcg32 g(4242);
    for (int trial = 0; trial < 25; ++trial) {
        std::vector<std::pair<std::string, double>> models;
        for (int i = 0; i < 8; ++i)
            models.emplace_back("m" + std::to_string(10 + i),
                                6.0 * g.next_double() - 3.0);
        std::vector<std::pair<std::string, double>> samples;
        for (int j = 0; j < 5; ++j)
            samples.emplace_back("s" + std::to_string(10 + j),
                                 6.0 * g.next_double() - 3.0);
        std::vector<CostHint> costs;
        for (auto& [id, v] : models)
            if (g.next_below(2) == 0)
                costs.push_back({id, 0.5 + 2.0 * g.next_double()});

        auto f = fit_with(models, samples);
        std::vector<std::string> anchors;
        for (auto& [id, v] : samples) anchors.push_back(id);
        std::vector<std::string> pool;
        for (auto& [id, v] : models) pool.push_back(id);
        auto got = select_models(f, anchors, pool, costs);

        // Replay: greedy per anchor, eligible set within ε of the best
        // information, cheapest then lexicographically smallest.
        auto cost_of = [&](const std::string& m) {
            for (auto& c : costs)
                if (c.model == m) return c.relative_cost;
            return 1.0;
        };
        std::sort(pool.begin(), pool.end());
        std::vector<bool> taken(pool.size(), false);
        std::vector<std::string> expect;
        for (const auto& a : anchors) {
            double beta = f.difficulty(a);
            double fmax = -1.0;
            for (std::size_t i = 0; i < pool.size(); ++i)
                if (!taken[i])
                    fmax = std::max(fmax,
                                    fisher_information(f.ability(pool[i]), beta));
            if (fmax < 0.0) break;
            std::size_t best = pool.size();
            for (std::size_t i = 0; i < pool.size(); ++i) {
                if (taken[i]) continue;
                if (fisher_information(f.ability(pool[i]), beta) <
                    fmax - kDefaultSimilarityEpsilon)
                    continue;
                if (best == pool.size() ||
                    cost_of(pool[i]) < cost_of(pool[best]))
                    best = i;
            }
            taken[best] = true;
            expect.push_back(pool[best]);
        }
        CHECK(got == expect);
    }
}

TEST_CASE("model selection input validation") {
    auto f = fit_with({{"m1", 0.0}}, {{"s1", 0.0}});
    CHECK_THROWS_AS(select_models(f, {"s1"}, {}), Error);
    CHECK_THROWS_AS(select_models(f, {"s1"}, {"m1", "m1"}), Error);
    CHECK_THROWS_AS(select_models(f, {"s1"}, {"ghost"}), Error);
    CHECK_THROWS_AS(select_models(f, {"ghost"}, {"m1"}), Error);
    CHECK_THROWS_AS(select_models(f, {"s1"}, {"m1"}, {{"m1", 0.0}}), Error);
    CHECK_THROWS_AS(select_models(f, {"s1"}, {"m1"}, {{"m1", 1.0}, {"m1", 2.0}}),
                    Error);
    CHECK_THROWS_AS(select_models(f, {"s1"}, {"m1"}, {}, -0.1), Error);
}

TEST_CASE("planning against a store picks from the sealed prior version") {
    EvalStore s = EvalStore::create();
    s.add_version({{"q1", ""}, {"q2", ""}, {"q3", ""}, {"q4", ""}},
                  {"a", "b", "c", "d"}, {});
    std::vector<EvalOutcome> batch;
    // a strongest … d weakest, with per-sample gradients.
    int table[4][4] = {{1, 1, 1, 1}, {1, 1, 1, 0}, {1, 1, 0, 0}, {1, 0, 0, 0}};
    const char* ms[4] = {"a", "b", "c", "d"};
    const char* qs[4] = {"q1", "q2", "q3", "q4"};
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            batch.push_back({ms[i], qs[j], table[i][j]});
    s.record_outcomes(0, batch);
    auto f = fit(s, 0);

    auto plan = plan_reevaluation(s, f, 2, {"newbie"}, s.version(0).roster);
    CHECK(plan.version == 1);
    CHECK(plan.budget == 2);
    CHECK(plan.anchors.size() == 2);
    CHECK(plan.chosen_models.size() == 2);
    CHECK(plan.forced_new_models == std::vector<std::string>{"newbie"});
    for (const auto& a : plan.anchors)
        CHECK(std::find(qs, qs + 4, a) != qs + 4);
    for (const auto& m : plan.chosen_models)
        CHECK(std::find(ms, ms + 4, m) != ms + 4);

    // Anchors come back ordered by difficulty.
    CHECK(f.difficulty(plan.anchors[0]) <= f.difficulty(plan.anchors[1]));

    // Restricting availability restricts the choice; unknown ids are ignored.
    auto limited = plan_reevaluation(s, f, 2, {}, {"c", "d", "zz"});
    for (const auto& m : limited.chosen_models)
        CHECK((m == "c" || m == "d"));

    // Forced new models are deduplicated and sorted.
    auto forced = plan_reevaluation(s, f, 1, {"z2", "z1", "z2"},
                                    s.version(0).roster);
    CHECK(forced.forced_new_models == std::vector<std::string>{"z1", "z2"});

    CHECK_THROWS_AS(plan_reevaluation(s, f, 0, {}, s.version(0).roster), Error);
    CHECK_THROWS_AS(plan_reevaluation(s, f, 99, {}, s.version(0).roster), Error);
    CHECK_THROWS_AS(plan_reevaluation(s, f, 2, {"a"}, s.version(0).roster),
                    Error);  // "new" model already on the roster
    CHECK_THROWS_AS(plan_reevaluation(s, f, 2, {}, {"zz"}), Error);

    EvalStore empty = EvalStore::create();
    CHECK_THROWS_AS(plan_reevaluation(empty, f, 1, {}, {"a"}), Error);

    EvalStore unsealed = EvalStore::create();
    unsealed.add_version({{"q1", ""}}, {"a"}, {});
    CHECK_THROWS_AS(plan_reevaluation(unsealed, f, 1, {}, {"a"}), Error);
}

TEST_CASE("plans round-trip through files") {
    ReevalPlan plan;
    plan.version = 4;
    plan.budget = 3;
    plan.anchors = {"q1", "q7", "q9"};
    plan.chosen_models = {"mz", "ma", "mk"};
    plan.forced_new_models = {"fresh"};

    fs::path dir = fs::temp_directory_path() / "liveeval_planner_tests";
    fs::create_directories(dir);
    fs::path p = dir / "plan.json";
    save_plan(plan, p);
    auto back = load_plan(p);
    CHECK(back.version == plan.version);
    CHECK(back.budget == plan.budget);
    CHECK(back.anchors == plan.anchors);
    CHECK(back.chosen_models == plan.chosen_models);
    CHECK(back.forced_new_models == plan.forced_new_models);

    CHECK_THROWS_AS(load_plan(dir / "missing.json"), Error);
}
