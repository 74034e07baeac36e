#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "doctest.h"
#include "liveeval/error.hpp"
#include "liveeval/rasch.hpp"
#include "liveeval/rng.hpp"

using namespace liveeval;
namespace fs = std::filesystem;

namespace {

RaschFit toy_params(double theta, double beta) {
    RaschFit f;
    f.model_ids = {"m"};
    f.abilities = {theta};
    f.sample_ids = {"s"};
    f.difficulties = {beta};
    return f;
}

// Plain-formula objective: data term with libm log, plus the Gaussian
// penalties. Independent of the library's compensated-summation path.
double naive_objective(const std::vector<EvalOutcome>& outcomes,
                       const std::vector<std::string>& models,
                       const std::vector<std::string>& samples,
                       const std::vector<double>& theta,
                       const std::vector<double>& beta, double prior_variance) {
    auto index_of = [](const std::vector<std::string>& ids, const std::string& id) {
        return std::size_t(std::find(ids.begin(), ids.end(), id) - ids.begin());
    };
    double obj = 0.0;
    for (const auto& o : outcomes) {
        double eta = theta[index_of(models, o.model)] -
                     beta[index_of(samples, o.sample)];
        double p = 1.0 / (1.0 + std::exp(-eta));
        obj += o.correct ? std::log(p) : std::log(1.0 - p);
    }
    for (double v : theta) obj -= v * v / (2.0 * prior_variance);
    for (double v : beta) obj -= v * v / (2.0 * prior_variance);
    return obj;
}

std::vector<EvalOutcome> dense_random_outcomes(int models, int samples,
                                               uint64_t seed) {
    Pcg32 g(seed);
    std::vector<EvalOutcome> out;
    for (int i = 0; i < models; ++i)
        for (int j = 0; j < samples; ++j)
            out.push_back({"m" + std::to_string(i), "s" + std::to_string(j),
                           static_cast<int>(g.next_below(2))});
    return out;
}

}  // namespace

TEST_CASE("predict_prob hits the textbook values") {
    CHECK(predict_prob(0.7, 0.7) == 0.5);
    CHECK(predict_prob(std::log(3.0), 0.0) ==
          doctest::Approx(0.75).epsilon(1e-15));
    CHECK(predict_prob(0.0, std::log(3.0)) ==
          doctest::Approx(0.25).epsilon(1e-15));
    CHECK(predict_prob(1000.0, 0.0) < 1.0);
    CHECK(predict_prob(-1000.0, 0.0) > 0.0);
    CHECK_THROWS_AS(predict_prob(std::nan(""), 0.0), Error);
    CHECK_THROWS_AS(predict_prob(0.0, INFINITY), Error);
}

TEST_CASE("log_likelihood: coin-flip fixture and naive cross-check") {
    RaschFit f = toy_params(0.0, 0.0);
    CHECK(log_likelihood(f, {{"m", "s", 1}}) ==
          doctest::Approx(std::log(0.5)).epsilon(1e-15));
    CHECK(log_likelihood(f, {{"m", "s", 0}}) ==
          doctest::Approx(std::log(0.5)).epsilon(1e-15));
    CHECK(log_likelihood(f, {{"m", "s", 1}, {"m", "s", 1}, {"m", "s", 0}}) ==
          doctest::Approx(3.0 * std::log(0.5)).epsilon(1e-15));
    CHECK_THROWS_AS(log_likelihood(f, {{"nope", "s", 1}}), Error);
    CHECK_THROWS_AS(log_likelihood(f, {{"m", "nope", 1}}), Error);
    CHECK_THROWS_AS(log_likelihood(f, {{"m", "s", 7}}), Error);

    RaschFit wide;
    wide.model_ids = {"a", "b", "c"};
    wide.abilities = {-0.8, 0.3, 1.7};
    wide.sample_ids = {"q1", "q2"};
    wide.difficulties = {0.4, -1.1};
    auto outcomes = std::vector<EvalOutcome>{
        {"a", "q1", 0}, {"a", "q2", 1}, {"b", "q1", 1},
        {"c", "q1", 1}, {"c", "q2", 0}};
    double expect = 0.0;
    for (const auto& o : outcomes) {
        double p = predict_prob(wide.ability(o.model), wide.difficulty(o.sample));
        expect += o.correct ? std::log(p) : std::log(1.0 - p);
    }
    CHECK(log_likelihood(wide, outcomes) ==
          doctest::Approx(expect).epsilon(1e-13));
}

TEST_CASE("analytic gradient matches central finite differences") {
    const int M = 5, N = 8;
    auto outcomes = dense_random_outcomes(M, N, 77);
    RaschFit f;
    Pcg32 g(78);
    for (int i = 0; i < M; ++i) {
        f.model_ids.push_back("m" + std::to_string(i));
        f.abilities.push_back(2.0 * g.next_double() - 1.0);
    }
    for (int j = 0; j < N; ++j) {
        f.sample_ids.push_back("s" + std::to_string(j));
        f.difficulties.push_back(2.0 * g.next_double() - 1.0);
    }
    auto grad = log_likelihood_gradient(f, outcomes);
    REQUIRE(grad.d_theta.size() == std::size_t(M));
    REQUIRE(grad.d_beta.size() == std::size_t(N));

    const double h = 1e-5;
    auto check_fd = [&](std::vector<double>& params, std::size_t k, double got) {
        double keep = params[k];
        params[k] = keep + h;
        double up = log_likelihood(f, outcomes);
        params[k] = keep - h;
        double dn = log_likelihood(f, outcomes);
        params[k] = keep;
        double fd = (up - dn) / (2.0 * h);
        CHECK(got == doctest::Approx(fd).epsilon(1e-6).scale(1.0));
    };
    for (int i = 0; i < M; ++i) check_fd(f.abilities, i, grad.d_theta[i]);
    for (int j = 0; j < N; ++j) check_fd(f.difficulties, j, grad.d_beta[j]);
}

TEST_CASE("fit: symmetric data gives symmetric parameters") {
    auto fit1 = fit({{"m1", "s1", 1}, {"m1", "s2", 1},
                     {"m2", "s1", 1}, {"m2", "s2", 1}});
    CHECK(fit1.converged);
    CHECK(fit1.abilities[0] == doctest::Approx(fit1.abilities[1]).epsilon(1e-9));
    CHECK(fit1.difficulties[0] ==
          doctest::Approx(fit1.difficulties[1]).epsilon(1e-9));
    CHECK(fit1.abilities[0] > fit1.difficulties[0]);  // everyone was right

    // At the optimum the translation direction has zero derivative, which
    // means the parameters sum to zero under the symmetric prior.
    double total = std::accumulate(fit1.abilities.begin(), fit1.abilities.end(), 0.0) +
                   std::accumulate(fit1.difficulties.begin(),
                                   fit1.difficulties.end(), 0.0);
    CHECK(std::abs(total) < 1e-7);
}

TEST_CASE("fit ranks a stronger model above a weaker one") {
    std::vector<EvalOutcome> outcomes;
    for (int j = 0; j < 6; ++j) {
        outcomes.push_back({"strong", "s" + std::to_string(j), j < 5 ? 1 : 0});
        outcomes.push_back({"weak", "s" + std::to_string(j), j < 2 ? 1 : 0});
    }
    auto f = fit(outcomes);
    CHECK(f.converged);
    CHECK(f.ability("strong") > f.ability("weak"));
    CHECK(f.has_model("weak"));
    CHECK_FALSE(f.has_model("s0"));
    CHECK(f.has_sample("s0"));
    CHECK_THROWS_AS(f.ability("s0"), Error);
    CHECK_THROWS_AS(f.difficulty("strong"), Error);
}

TEST_CASE("fit is a function of the outcome set, not its order") {
    auto outcomes = dense_random_outcomes(6, 9, 5150);
    auto a = fit(outcomes);
    std::vector<EvalOutcome> shuffled = outcomes;
    Pcg32 g(42);
    g.shuffle(shuffled);
    REQUIRE(shuffled != outcomes);
    auto b = fit(shuffled);
    CHECK(a.model_ids == b.model_ids);
    CHECK(a.sample_ids == b.sample_ids);
    CHECK(a.abilities == b.abilities);        // bit-exact
    CHECK(a.difficulties == b.difficulties);  // bit-exact
    CHECK(a.penalized_log_likelihood == b.penalized_log_likelihood);
    CHECK(a.iterations == b.iterations);
}

TEST_CASE("fit rejects bad inputs and bad configs") {
    CHECK_THROWS_AS(fit(std::vector<EvalOutcome>{}), Error);
    CHECK_THROWS_AS(fit({{"m", "s", 1}, {"m", "s", 1}}), Error);  // duplicate pair
    CHECK_THROWS_AS(fit({{"m", "s", 3}}), Error);

    FitConfig bad;
    bad.max_iterations = 0;
    CHECK_THROWS_AS(fit({{"m", "s", 1}}, bad), Error);
    bad = FitConfig{};
    bad.tolerance = 0.0;
    CHECK_THROWS_AS(fit({{"m", "s", 1}}, bad), Error);
    bad = FitConfig{};
    bad.prior_variance = -1.0;
    CHECK_THROWS_AS(fit({{"m", "s", 1}}, bad), Error);
}

TEST_CASE("objective trace rises monotonically to the reported optimum") {
    auto outcomes = dense_random_outcomes(8, 20, 99);
    auto f = fit(outcomes);
    REQUIRE(!f.objective_trace.empty());
    for (std::size_t k = 1; k < f.objective_trace.size(); ++k)
        CHECK(f.objective_trace[k] >= f.objective_trace[k - 1] - 1e-9);
    CHECK(f.penalized_log_likelihood == f.objective_trace.back());
    CHECK(f.iterations == static_cast<int>(f.objective_trace.size()));

    // The reported objective matches an independent evaluation of the formula.
    double naive = naive_objective(outcomes, f.model_ids, f.sample_ids,
                                   f.abilities, f.difficulties, 100.0);
    CHECK(f.penalized_log_likelihood == doctest::Approx(naive).epsilon(1e-10));
}

TEST_CASE("a looser tolerance never needs more sweeps") {
    auto outcomes = dense_random_outcomes(7, 15, 123);
    FitConfig loose, tight;
    loose.tolerance = 1e-2;
    tight.tolerance = 1e-10;
    auto fl = fit(outcomes, loose);
    auto ft = fit(outcomes, tight);
    CHECK(fl.iterations <= ft.iterations);
    CHECK(fl.converged);
    CHECK(ft.converged);

    FitConfig starved;
    starved.max_iterations = 1;
    auto fs = fit(outcomes, starved);
    CHECK(fs.iterations == 1);
    CHECK_FALSE(fs.converged);
}

TEST_CASE("coordinate grid scan confirms the optimum on a small instance") {
    // 3 models × 4 samples. Every row and every column mixes successes and
    // failures, so all parameters stay well inside the scan box below.
    std::vector<EvalOutcome> outcomes = {
        {"a", "q1", 1}, {"a", "q2", 1}, {"a", "q3", 0}, {"a", "q4", 1},
        {"b", "q1", 0}, {"b", "q2", 1}, {"b", "q3", 1}, {"b", "q4", 0},
        {"c", "q1", 1}, {"c", "q2", 0}, {"c", "q3", 0}, {"c", "q4", 0}};
    auto f = fit(outcomes);
    REQUIRE(f.converged);

    // Independent maximizer: cyclic exhaustive scan of each coordinate over a
    // fine grid until no coordinate moves. Slow but with no shared code.
    std::vector<double> theta(3, 0.0), beta(4, 0.0);
    auto objective = [&] {
        return naive_objective(outcomes, f.model_ids, f.sample_ids, theta, beta,
                               100.0);
    };
    const double lo = -4.0, step = 0.002;
    const int points = 4001;
    for (int sweep = 0; sweep < 200; ++sweep) {
        bool moved = false;
        auto scan = [&](double& coord) {
            double orig = coord, best_v = coord;
            double best_obj = objective();
            for (int k = 0; k < points; ++k) {
                coord = lo + step * k;
                double obj = objective();
                if (obj > best_obj) {
                    best_obj = obj;
                    best_v = coord;
                }
            }
            coord = best_v;
            if (best_v != orig) moved = true;
        };
        for (auto& v : theta) scan(v);
        for (auto& v : beta) scan(v);
        if (!moved) break;
    }
    CHECK(std::abs(objective() - f.penalized_log_likelihood) <= 1e-3);
    for (std::size_t i = 0; i < theta.size(); ++i)
        CHECK(std::abs(f.abilities[i] - theta[i]) <= 0.1);
}

TEST_CASE("fit recovers the abilities that generated the data") {
    const int M = 10, N = 400;
    Pcg32 tg = substream(555, "true-theta");
    Pcg32 bg = substream(555, "true-beta");
    std::vector<double> theta(M), beta(N);
    for (auto& v : theta) v = tg.next_normal();
    for (auto& v : beta) v = bg.next_normal();
    Pcg32 og = substream(555, "obs");
    std::vector<EvalOutcome> outcomes;
    for (int i = 0; i < M; ++i)
        for (int j = 0; j < N; ++j) {
            double p = 1.0 / (1.0 + std::exp(-(theta[i] - beta[j])));
            outcomes.push_back({"m" + std::to_string(10 + i),
                                "s" + std::to_string(1000 + j),
                                og.next_double() < p ? 1 : 0});
        }
    auto f = fit(outcomes);
    CHECK(f.converged);

    double mx = 0.0, my = 0.0;
    for (int i = 0; i < M; ++i) {
        mx += theta[i];
        my += f.abilities[i];
    }
    mx /= M;
    my /= M;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (int i = 0; i < M; ++i) {
        double dx = theta[i] - mx, dy = f.abilities[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    CHECK(sxy / std::sqrt(sxx * syy) > 0.9);
}

TEST_CASE("fitting from a store matches fitting the same outcomes directly") {
    EvalStore s = EvalStore::create();
    s.add_version({{"q1", "x"}, {"q2", "x"}}, {"a", "b"}, {});
    s.record_outcomes(0, {{"a", "q1", 1},
                          {"a", "q2", 0},
                          {"b", "q1", 0},
                          {"b", "q2", 0}});
    s.add_version({{"q3", "y"}}, {"c"}, {"a"});
    s.record_outcomes(1, {{"a", "q3", 1}, {"c", "q3", 1}});

    auto from_store = fit(s, 1);
    auto direct = fit(s.observed_outcomes(1));
    CHECK(from_store.abilities == direct.abilities);
    CHECK(from_store.difficulties == direct.difficulties);
    CHECK(from_store.penalized_log_likelihood == direct.penalized_log_likelihood);

    CHECK_THROWS_AS(fit(s, 2), Error);

    // Only versions 0..0: model c hasn't appeared yet.
    auto early = fit(s, 0);
    CHECK_FALSE(early.has_model("c"));
    CHECK_FALSE(early.has_sample("q3"));

    // A roster model with no outcomes anywhere in 0..t is a coverage error.
    EvalStore sparse = EvalStore::create();
    sparse.add_version({{"q1", ""}}, {"a"}, {});
    sparse.record_outcomes(0, {{"a", "q1", 1}});
    sparse.add_version({}, {"ghost"}, {});
    CHECK_THROWS_WITH_AS(fit(sparse, 1),
                         "model 'ghost' has no observed outcomes", Error);
}

TEST_CASE("fit files round-trip bit-exactly") {
    fs::path dir = fs::temp_directory_path() / "liveeval_rasch_tests";
    fs::create_directories(dir);
    auto outcomes = dense_random_outcomes(5, 11, 2718);
    auto f = fit(outcomes);
    fs::path p = dir / "fit.json";
    save_fit(f, p);
    auto back = load_fit(p);
    CHECK(back.model_ids == f.model_ids);
    CHECK(back.sample_ids == f.sample_ids);
    CHECK(back.abilities == f.abilities);        // %.17g survives the trip
    CHECK(back.difficulties == f.difficulties);
    CHECK(back.penalized_log_likelihood == f.penalized_log_likelihood);
    CHECK(back.iterations == f.iterations);
    CHECK(back.converged == f.converged);
    CHECK(back.objective_trace.empty());  // diagnostics are not serialized

    // Writing the loaded fit reproduces the file byte for byte.
    fs::path p2 = dir / "fit2.json";
    save_fit(back, p2);
    std::ifstream a(p, std::ios::binary), b(p2, std::ios::binary);
    std::string sa((std::istreambuf_iterator<char>(a)), {});
    std::string sb((std::istreambuf_iterator<char>(b)), {});
    CHECK(sa == sb);

    CHECK_THROWS_AS(load_fit(dir / "missing.json"), Error);
    std::ofstream(dir / "junk.json") << "]]]";
    CHECK_THROWS_AS(load_fit(dir / "junk.json"), Error);
    std::ofstream(dir / "inf.json")
        << "{\"abilities\":{\"m\":1e999},\"difficulties\":{\"s\":0},"
           "\"penalized_log_likelihood\":0,\"iterations\":1,\"converged\":true}";
    CHECK_THROWS_AS(load_fit(dir / "inf.json"), Error);
}
