#include "liveeval/simlab.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <unordered_set>

#include "liveeval/error.hpp"
#include "liveeval/estimator.hpp"
#include "liveeval/kernels.hpp"
#include "liveeval/rng.hpp"

namespace liveeval {

namespace {

int id_width(int count, int min_width) {
    int width = 1, v = count - 1;
    while (v >= 10) {
        v /= 10;
        ++width;
    }
    return std::max(width, min_width);
}

std::string padded(char prefix, int value, int width) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%c%0*d", prefix, std::min(width, 10), value);
    return buf;
}

void check_config(const WorldConfig& c) {
    if (c.num_models < 1) fail("num_models must be positive");
    if (c.num_domains < 1) fail("num_domains must be positive");
    if (c.samples_per_domain < 1) fail("samples_per_domain must be positive");
    if (!std::isfinite(c.theta_mean) || !std::isfinite(c.beta_mean))
        fail("world means must be finite");
    if (!(c.theta_sd > 0.0) || !std::isfinite(c.theta_sd) ||
        !(c.beta_sd > 0.0) || !std::isfinite(c.beta_sd))
        fail("world standard deviations must be positive");
}

std::vector<SampleInfo> to_sample_infos(const SimWorld& w,
                                        const std::vector<int>& positions) {
    std::vector<SampleInfo> out;
    out.reserve(positions.size());
    for (int p : positions)
        out.push_back({w.sample_ids[static_cast<std::size_t>(p)],
                       w.domain_ids[static_cast<std::size_t>(
                           w.sample_domain[static_cast<std::size_t>(p)])]});
    return out;
}

std::vector<EvalOutcome> outcomes_for(const SimWorld& w,
                                      const std::vector<std::string>& models,
                                      const std::vector<int>& positions) {
    std::vector<EvalOutcome> out;
    out.reserve(models.size() * positions.size());
    for (const auto& m : models) {
        auto it = std::lower_bound(w.model_ids.begin(), w.model_ids.end(), m);
        int i = static_cast<int>(it - w.model_ids.begin());
        for (int p : positions)
            out.push_back({m, w.sample_ids[static_cast<std::size_t>(p)],
                           w.outcome(i, p)});
    }
    return out;
}

// Shared spine of every experiment: version 0 = train with everyone,
// version 1 = test with only `forced` (or the planner's pick) re-run, then
// estimate the rest and compare against realized accuracy.
ExperimentResult run_pipeline(const SimWorld& w, int budget_label,
                              const std::vector<std::string>* forced,
                              const std::vector<int>& train_pos,
                              const std::vector<int>& test_pos,
                              const EfficientEvalOptions& opts) {
    if (test_pos.empty()) fail("split leaves no test samples");
    const int M = w.num_models();
    const int D = static_cast<int>(w.domain_ids.size());

    EvalStore store;
    store.add_version(to_sample_infos(w, train_pos), w.model_ids, {});
    store.record_outcomes(0, outcomes_for(w, w.model_ids, train_pos));
    RaschFit fit0 = fit(store, 0, opts.fit);

    std::vector<std::string> chosen;
    if (forced) {
        chosen = *forced;
    } else {
        ReevalPlan plan =
            plan_reevaluation(store, fit0, budget_label, {}, w.model_ids,
                              opts.costs, opts.similarity_epsilon);
        chosen = plan.chosen_models;
    }
    store.add_version(to_sample_infos(w, test_pos), {}, chosen);
    store.record_outcomes(1, outcomes_for(w, chosen, test_pos));
    RaschFit fit1 = fit(store, 1, opts.fit);

    std::unordered_set<std::string> reeval_set(chosen.begin(), chosen.end());
    std::vector<std::string> test_ids;
    test_ids.reserve(test_pos.size());
    std::vector<std::vector<std::string>> dom_ids(static_cast<std::size_t>(D));
    std::vector<std::vector<int>> dom_pos(static_cast<std::size_t>(D));
    for (int p : test_pos) {
        const auto& id = w.sample_ids[static_cast<std::size_t>(p)];
        int d = w.sample_domain[static_cast<std::size_t>(p)];
        test_ids.push_back(id);
        dom_ids[static_cast<std::size_t>(d)].push_back(id);
        dom_pos[static_cast<std::size_t>(d)].push_back(p);
    }

    ExperimentResult r;
    r.budget = budget_label;
    r.seed = w.config.seed;
    r.reevaluated = chosen;
    std::sort(r.reevaluated.begin(), r.reevaluated.end());

    std::vector<double> pred_all, act_all;
    std::vector<std::vector<double>> pred_dom(static_cast<std::size_t>(D)),
        act_dom(static_cast<std::size_t>(D));
    for (int i = 0; i < M; ++i) {
        const auto& model = w.model_ids[static_cast<std::size_t>(i)];
        if (reeval_set.count(model)) continue;
        pred_all.push_back(estimate_score(model, test_ids, fit1));
        act_all.push_back(w.realized_accuracy(i, test_pos));
        for (int d = 0; d < D; ++d) {
            auto di = static_cast<std::size_t>(d);
            if (dom_ids[di].empty()) continue;
            pred_dom[di].push_back(estimate_score(model, dom_ids[di], fit1));
            act_dom[di].push_back(w.realized_accuracy(i, dom_pos[di]));
        }
    }
    r.test_model_count = static_cast<int>(pred_all.size());
    r.degenerate = pred_all.empty();
    if (!r.degenerate) {
        ErrorStats es = mean_absolute_error(pred_all, act_all);
        r.overall_mae_points = es.mae_points;
        r.overall_mad_points = es.mad_points;
    }
    for (int d = 0; d < D; ++d) {
        auto di = static_cast<std::size_t>(d);
        DomainError de{w.domain_ids[di], 0.0, 0.0};
        if (!pred_dom[di].empty()) {
            ErrorStats es = mean_absolute_error(pred_dom[di], act_dom[di]);
            de.mae_points = es.mae_points;
            de.mad_points = es.mad_points;
        }
        r.per_domain.push_back(std::move(de));
    }

    std::vector<double> scored, realized;
    for (int i = 0; i < M; ++i) {
        const auto& model = w.model_ids[static_cast<std::size_t>(i)];
        realized.push_back(w.realized_accuracy(i, test_pos));
        scored.push_back(reeval_set.count(model)
                             ? store.observed_score(model, 1)
                             : estimate_score(model, test_ids, fit1));
    }
    r.spearman = spearman_rank_correlation(scored, realized);
    r.evaluations_performed =
        static_cast<long long>(chosen.size()) *
        static_cast<long long>(test_pos.size());
    r.baseline_evaluations =
        static_cast<long long>(M) * static_cast<long long>(test_pos.size());
    return r;
}

}  // namespace

double SimWorld::realized_accuracy(int model,
                                   const std::vector<int>& samples) const {
    if (samples.empty()) fail("realized_accuracy over an empty sample set");
    long sum = 0;
    for (int p : samples) sum += outcome(model, p);
    return static_cast<double>(sum) / static_cast<double>(samples.size());
}

SimWorld generate_world(const WorldConfig& config) {
    check_config(config);
    SimWorld w;
    w.config = config;
    const int M = config.num_models, D = config.num_domains,
              n = config.samples_per_domain;
    const int mw = id_width(M, 2), dw = id_width(D, 2), qw = id_width(n, 4);

    for (int i = 0; i < M; ++i) w.model_ids.push_back(padded('m', i, mw));
    for (int d = 0; d < D; ++d) w.domain_ids.push_back(padded('d', d, dw));

    Pcg32 theta_rng = substream(config.seed, "theta", 0);
    for (int i = 0; i < M; ++i)
        w.true_theta.push_back(config.theta_mean +
                               config.theta_sd * theta_rng.next_normal());

    for (int d = 0; d < D; ++d) {
        Pcg32 beta_rng = substream(config.seed, "beta", static_cast<uint64_t>(d));
        for (int q = 0; q < n; ++q) {
            w.sample_ids.push_back(w.domain_ids[static_cast<std::size_t>(d)] +
                                   "/" + padded('q', q, qw));
            w.sample_domain.push_back(d);
            w.true_beta.push_back(config.beta_mean +
                                  config.beta_sd * beta_rng.next_normal());
        }
    }
    const int N = w.num_samples();
    w.outcomes.assign(static_cast<std::size_t>(M) * static_cast<std::size_t>(N),
                      0);
    for (int d = 0; d < D; ++d) {
        // Sample-major draw order within the domain, one stream per domain:
        // adding models or domains elsewhere never perturbs these draws.
        Pcg32 rng = substream(config.seed, "outcomes", static_cast<uint64_t>(d));
        for (int q = 0; q < n; ++q) {
            int j = d * n + q;
            for (int i = 0; i < M; ++i) {
                double p = kernels::sigmoid1(
                    w.true_theta[static_cast<std::size_t>(i)] -
                    w.true_beta[static_cast<std::size_t>(j)]);
                if (rng.next_double() < p)
                    w.outcomes[static_cast<std::size_t>(i) *
                                   static_cast<std::size_t>(N) +
                               static_cast<std::size_t>(j)] = 1;
            }
        }
    }
    for (int j = 0; j < N; ++j)
        w.sample_index.emplace(w.sample_ids[static_cast<std::size_t>(j)], j);
    return w;
}

ChronologicalSplit chronological_split(const SimWorld& world,
                                       double train_fraction) {
    if (!(train_fraction > 0.0) || !(train_fraction < 1.0))
        fail("train_fraction must be strictly between 0 and 1");
    const int D = static_cast<int>(world.domain_ids.size());
    std::vector<std::vector<int>> by_domain(static_cast<std::size_t>(D));
    for (int p = 0; p < world.num_samples(); ++p)
        by_domain[static_cast<std::size_t>(world.sample_domain[
                      static_cast<std::size_t>(p)])]
            .push_back(p);  // already chronological within each domain

    ChronologicalSplit split;
    for (const auto& positions : by_domain) {
        double want = train_fraction * static_cast<double>(positions.size());
        // The 1e-9 guard absorbs representation error: 0.2·5 must see 1.0,
        // not the 1.0000000000000002 the product actually is.
        auto n_train = static_cast<std::size_t>(std::ceil(want - 1e-9));
        for (std::size_t k = 0; k < positions.size(); ++k)
            (k < n_train ? split.train : split.test).push_back(positions[k]);
    }
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

ExperimentResult run_efficient_eval(const SimWorld& world, int budget,
                                    const EfficientEvalOptions& options) {
    if (budget < 1 || budget > world.num_models())
        fail("budget must be between 1 and the number of models");
    ChronologicalSplit split = chronological_split(world, options.train_fraction);
    return run_pipeline(world, budget, nullptr, split.train, split.test,
                        options);
}

ExperimentResult run_with_reeval_set(const SimWorld& world,
                                     const std::vector<std::string>& reevaluated,
                                     const EfficientEvalOptions& options) {
    if (reevaluated.empty()) fail("re-evaluation set must be nonempty");
    std::vector<std::string> set = reevaluated;
    std::sort(set.begin(), set.end());
    if (std::adjacent_find(set.begin(), set.end()) != set.end())
        fail("duplicate model in re-evaluation set");
    for (const auto& m : set)
        if (!std::binary_search(world.model_ids.begin(), world.model_ids.end(), m))
            fail("unknown model '" + m + "' in re-evaluation set");
    ChronologicalSplit split = chronological_split(world, options.train_fraction);
    return run_pipeline(world, static_cast<int>(set.size()), &set, split.train,
                        split.test, options);
}

std::vector<ExperimentResult> budget_sweep(const SimWorld& world,
                                           const std::vector<int>& budgets,
                                           const EfficientEvalOptions& options) {
    if (budgets.empty()) fail("budget list must be nonempty");
    std::vector<ExperimentResult> results;
    for (int b : budgets) results.push_back(run_efficient_eval(world, b, options));
    return results;
}

std::vector<SampleSizeResult> sample_size_study(
    const SimWorld& world, const std::vector<int>& test_sizes, int budget,
    const EfficientEvalOptions& options) {
    if (test_sizes.empty()) fail("test size list must be nonempty");
    if (budget < 1 || budget > world.num_models())
        fail("budget must be between 1 and the number of models");
    ChronologicalSplit split = chronological_split(world, options.train_fraction);
    std::vector<SampleSizeResult> results;
    for (int size : test_sizes) {
        if (size < 1) fail("test size must be positive");
        if (static_cast<std::size_t>(size) > split.test.size())
            fail("test size " + std::to_string(size) +
                 " exceeds available test samples (" +
                 std::to_string(split.test.size()) + ")");
        // Keyed by the size itself, so each grid point subsamples the same
        // way no matter what else is on the grid.
        Pcg32 rng = substream(world.config.seed, "subsample",
                              static_cast<uint64_t>(size));
        std::vector<int> pos = split.test;
        rng.shuffle(pos);
        pos.resize(static_cast<std::size_t>(size));
        std::sort(pos.begin(), pos.end());  // back to chronological order
        ExperimentResult r =
            run_pipeline(world, budget, nullptr, split.train, pos, options);
        results.push_back({size, r.overall_mae_points});
    }
    return results;
}

EvalStore ingest_external_matrix(const std::filesystem::path& path) {
    EvalStore store;
    store.ingest_outcome_file(path);
    for (int t = 0; t < store.num_versions(); ++t)
        if (!store.is_sealed(t))
            fail("external matrix is incomplete: version " + std::to_string(t) +
                 " is missing " + std::to_string(store.missing_pairs(t)) +
                 " outcomes");
    return store;
}

std::string format_experiment_table(const ExperimentResult& result) {
    std::string out = "domain,mae_points,mad_points\n";
    char buf[96];
    for (const auto& d : result.per_domain) {
        std::snprintf(buf, sizeof buf, "%s,%.4f,%.4f\n", d.domain.c_str(),
                      d.mae_points, d.mad_points);
        out += buf;
    }
    std::snprintf(buf, sizeof buf, "overall,%.4f,%.4f\n",
                  result.overall_mae_points, result.spearman);
    out += buf;
    return out;
}

}  // namespace liveeval
