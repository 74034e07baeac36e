// Command-line front end. Thin argument handling here; all behavior lives in
// the library. Exit codes: 0 ok, 2 bad input/usage, 1 internal failure.
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "liveeval/error.hpp"
#include "liveeval/estimator.hpp"
#include "liveeval/eval_store.hpp"
#include "liveeval/filters.hpp"
#include "liveeval/judge_http.hpp"
#include "liveeval/mock_judges.hpp"
#include "liveeval/planner.hpp"
#include "liveeval/rasch.hpp"
#include "liveeval/simlab.hpp"

namespace {

using liveeval::fail;

const CLI::Range kPositiveInt{1, std::numeric_limits<int>::max()};

template <class... Args>
std::string strf(const char* f, Args... args) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

std::string join(const std::vector<std::string>& v, const char* sep = ", ") {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += sep;
        out += v[i];
    }
    return out;
}

// Optional JSON file with defaults; flags always win. Loaded by a pre-scan of
// argv so the values are in place before CLI11 parses.
struct FileConfig {
    nlohmann::json doc = nlohmann::json::object();
    std::string path;

    template <class T>
    T get(const char* section, const char* key, T fallback) const {
        if (!doc.contains(section)) return fallback;
        const auto& s = doc.at(section);
        if (!s.is_object() || !s.contains(key)) return fallback;
        try {
            return s.at(key).get<T>();
        } catch (const nlohmann::json::exception&) {
            fail("config '" + path + "': bad value for " + section + "." + key);
        }
    }
    std::string top_string(const char* key, const std::string& fallback) const {
        if (!doc.contains(key)) return fallback;
        try {
            return doc.at(key).get<std::string>();
        } catch (const nlohmann::json::exception&) {
            fail("config '" + path + "': bad value for " + std::string(key));
        }
    }
};

FileConfig load_file_config(int argc, char** argv) {
    FileConfig cfg;
    for (int i = 1; i < argc; ++i) {
        std::string arg = argv[i];
        std::string path;
        if (arg == "--config" && i + 1 < argc)
            path = argv[i + 1];
        else if (arg.rfind("--config=", 0) == 0)
            path = arg.substr(9);
        if (path.empty()) continue;
        std::ifstream in(path, std::ios::binary);
        if (!in) fail("cannot open config '" + path + "'");
        try {
            cfg.doc = nlohmann::json::parse(in);
        } catch (const nlohmann::json::exception& e) {
            fail("config '" + path + "': " + e.what());
        }
        if (!cfg.doc.is_object()) fail("config '" + path + "': expected an object");
        cfg.path = path;
    }
    return cfg;
}

std::string need_store(const std::string& flag_value, const FileConfig& cfg) {
    if (!flag_value.empty()) return flag_value;
    std::string p = cfg.top_string("store_path", "");
    if (p.empty()) fail("no store path given (use --store/--path or config store_path)");
    return p;
}

int resolve_version(const liveeval::EvalStore& store, int requested) {
    return requested < 0 ? store.latest_version() : requested;
}

// `sample_id,domain_tag` with header; the tag may be empty.
std::vector<liveeval::SampleInfo> read_samples_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("cannot open '" + path + "'");
    std::vector<liveeval::SampleInfo> samples;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line_no == 1) {
            if (line != "sample_id,domain_tag")
                fail(path + ": expected header 'sample_id,domain_tag'");
            continue;
        }
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        auto comma = line.find(',');
        if (comma == std::string::npos ||
            line.find(',', comma + 1) != std::string::npos)
            fail(path + " line " + std::to_string(line_no) +
                 ": expected 2 fields");
        samples.push_back({line.substr(0, comma), line.substr(comma + 1)});
    }
    return samples;
}

// `model_id,relative_cost` with header.
std::vector<liveeval::CostHint> read_costs_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("cannot open '" + path + "'");
    std::vector<liveeval::CostHint> costs;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line_no == 1) {
            if (line != "model_id,relative_cost")
                fail(path + ": expected header 'model_id,relative_cost'");
            continue;
        }
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        auto comma = line.find(',');
        if (comma == std::string::npos ||
            line.find(',', comma + 1) != std::string::npos)
            fail(path + " line " + std::to_string(line_no) +
                 ": expected 2 fields");
        std::string id = line.substr(0, comma);
        std::string num = line.substr(comma + 1);
        double value = 0.0;
        std::size_t used = 0;
        try {
            value = std::stod(num, &used);
        } catch (const std::exception&) {
            used = std::string::npos;
        }
        if (used != num.size() || num.empty())
            fail(path + " line " + std::to_string(line_no) +
                 ": bad relative_cost '" + num + "'");
        costs.push_back({id, value});
    }
    return costs;
}

void write_json_file(const nlohmann::json& doc, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail("cannot open '" + path + "' for writing");
    out << doc.dump(2) << '\n';
    if (!out) fail("write failed for '" + path + "'");
}

// ---- simulation plumbing shared by simulate / sweep / sample-size ----

struct WorldFlags {
    int models = 17;
    int domains = 10;
    int samples_per_domain = 700;
    double theta_mean = 0.0;
    double theta_sd = 1.2;
    double beta_mean = 0.0;
    double beta_sd = 1.0;
    double train_fraction = 0.15;
    int seeds = 20;
    std::uint64_t seed_start = 1;
};

WorldFlags world_defaults(const FileConfig& cfg) {
    WorldFlags w;
    w.models = cfg.get("sim", "models", w.models);
    w.domains = cfg.get("sim", "domains", w.domains);
    w.samples_per_domain = cfg.get("sim", "samples_per_domain", w.samples_per_domain);
    w.theta_mean = cfg.get("sim", "theta_mean", w.theta_mean);
    w.theta_sd = cfg.get("sim", "theta_sd", w.theta_sd);
    w.beta_mean = cfg.get("sim", "beta_mean", w.beta_mean);
    w.beta_sd = cfg.get("sim", "beta_sd", w.beta_sd);
    w.train_fraction = cfg.get("sim", "train_fraction", w.train_fraction);
    w.seeds = cfg.get("sim", "seeds", w.seeds);
    w.seed_start = cfg.get("sim", "seed_start", w.seed_start);
    return w;
}

void add_world_flags(CLI::App* sub, WorldFlags& w) {
    sub->add_option("--models", w.models, "models in the synthetic world")
        ->check(kPositiveInt)->capture_default_str();
    sub->add_option("--domains", w.domains, "domains in the synthetic world")
        ->check(kPositiveInt)->capture_default_str();
    sub->add_option("--samples-per-domain", w.samples_per_domain,
                    "questions per domain")
        ->check(kPositiveInt)->capture_default_str();
    sub->add_option("--theta-mean", w.theta_mean, "ability mean")
        ->capture_default_str();
    sub->add_option("--theta-sd", w.theta_sd, "ability spread")
        ->capture_default_str();
    sub->add_option("--beta-mean", w.beta_mean, "difficulty mean")
        ->capture_default_str();
    sub->add_option("--beta-sd", w.beta_sd, "difficulty spread")
        ->capture_default_str();
    sub->add_option("--train-fraction", w.train_fraction,
                    "chronological share forming version 0")
        ->capture_default_str();
    sub->add_option("--seeds", w.seeds, "number of worlds to run")
        ->check(kPositiveInt)->capture_default_str();
    sub->add_option("--seed-start", w.seed_start, "seed of the first world")
        ->capture_default_str();
}

liveeval::WorldConfig world_config(const WorldFlags& w, std::uint64_t seed) {
    liveeval::WorldConfig wc;
    wc.num_models = w.models;
    wc.num_domains = w.domains;
    wc.samples_per_domain = w.samples_per_domain;
    wc.theta_mean = w.theta_mean;
    wc.theta_sd = w.theta_sd;
    wc.beta_mean = w.beta_mean;
    wc.beta_sd = w.beta_sd;
    wc.seed = seed;
    return wc;
}

nlohmann::json world_json(const WorldFlags& w) {
    nlohmann::json j;
    j["models"] = w.models;
    j["domains"] = w.domains;
    j["samples_per_domain"] = w.samples_per_domain;
    j["theta_mean"] = w.theta_mean;
    j["theta_sd"] = w.theta_sd;
    j["beta_mean"] = w.beta_mean;
    j["beta_sd"] = w.beta_sd;
    j["train_fraction"] = w.train_fraction;
    return j;
}

nlohmann::json result_json(const liveeval::ExperimentResult& r) {
    nlohmann::json j;
    j["seed"] = r.seed;
    j["budget"] = r.budget;
    j["overall_mae_points"] = r.overall_mae_points;
    j["overall_mad_points"] = r.overall_mad_points;
    j["spearman"] = r.spearman;
    j["test_model_count"] = r.test_model_count;
    j["degenerate"] = r.degenerate;
    j["evaluations_performed"] = r.evaluations_performed;
    j["baseline_evaluations"] = r.baseline_evaluations;
    j["reevaluated"] = r.reevaluated;
    auto rows = nlohmann::json::array();
    for (const auto& d : r.per_domain) {
        nlohmann::json row;
        row["domain"] = d.domain;
        row["mae_points"] = d.mae_points;
        row["mad_points"] = d.mad_points;
        rows.push_back(std::move(row));
    }
    j["per_domain"] = std::move(rows);
    return j;
}

// Same shape as the single-run table, values averaged across runs. With one
// run the output is byte-identical to format_experiment_table.
std::string aggregate_table(const std::vector<liveeval::ExperimentResult>& runs) {
    const double n = static_cast<double>(runs.size());
    std::string out = "domain,mae_points,mad_points\n";
    for (std::size_t d = 0; d < runs.front().per_domain.size(); ++d) {
        double mae = 0.0, mad = 0.0;
        for (const auto& r : runs) {
            mae += r.per_domain[d].mae_points;
            mad += r.per_domain[d].mad_points;
        }
        out += strf("%s,%.4f,%.4f\n", runs.front().per_domain[d].domain.c_str(),
                    mae / n, mad / n);
    }
    double mae = 0.0, sp = 0.0;
    for (const auto& r : runs) {
        mae += r.overall_mae_points;
        sp += r.spearman;
    }
    out += strf("overall,%.4f,%.4f\n", mae / n, sp / n);
    return out;
}

std::string savings_line(const std::vector<liveeval::ExperimentResult>& runs) {
    long long performed = 0, baseline = 0;
    for (const auto& r : runs) {
        performed += r.evaluations_performed;
        baseline += r.baseline_evaluations;
    }
    double saved =
        baseline > 0 ? 100.0 * (1.0 - double(performed) / double(baseline)) : 0.0;
    return strf("evaluations: %lld performed, %lld baseline, saved %.1f%%",
                performed, baseline, saved);
}

nlohmann::json aggregate_json(const std::vector<liveeval::ExperimentResult>& runs) {
    const double n = static_cast<double>(runs.size());
    nlohmann::json agg;
    double mae = 0.0, mad = 0.0, sp = 0.0;
    long long performed = 0, baseline = 0;
    int degenerate = 0;
    for (const auto& r : runs) {
        mae += r.overall_mae_points;
        mad += r.overall_mad_points;
        sp += r.spearman;
        performed += r.evaluations_performed;
        baseline += r.baseline_evaluations;
        if (r.degenerate) ++degenerate;
    }
    agg["mean_overall_mae_points"] = mae / n;
    agg["mean_overall_mad_points"] = mad / n;
    agg["mean_spearman"] = sp / n;
    agg["evaluations_performed"] = performed;
    agg["baseline_evaluations"] = baseline;
    agg["savings_fraction"] =
        baseline > 0 ? 1.0 - double(performed) / double(baseline) : 0.0;
    agg["degenerate_runs"] = degenerate;
    auto rows = nlohmann::json::array();
    for (std::size_t d = 0; d < runs.front().per_domain.size(); ++d) {
        double dm = 0.0, dd = 0.0;
        for (const auto& r : runs) {
            dm += r.per_domain[d].mae_points;
            dd += r.per_domain[d].mad_points;
        }
        nlohmann::json row;
        row["domain"] = runs.front().per_domain[d].domain;
        row["mean_mae_points"] = dm / n;
        row["mean_mad_points"] = dd / n;
        rows.push_back(std::move(row));
    }
    agg["per_domain"] = std::move(rows);
    return agg;
}

// ---- judge construction for the filter subcommands ----

struct JudgeFlags {
    std::string mock;
    std::string endpoint;
    std::string judge_model;
    std::string token_env = "LIVEEVAL_JUDGE_TOKEN";
    int timeout_ms = 30000;
    int retries = 3;
};

void add_judge_flags(CLI::App* sub, JudgeFlags& j,
                     const std::vector<std::string>& mock_names) {
    sub->add_option("--mock", j.mock, "built-in judge instead of HTTP")
        ->check(CLI::IsMember(mock_names));
    sub->add_option("--endpoint", j.endpoint, "judge service base URL");
    sub->add_option("--judge-model", j.judge_model, "model name sent to the service");
    sub->add_option("--token-env", j.token_env,
                    "environment variable holding the bearer token")
        ->capture_default_str();
    sub->add_option("--timeout-ms", j.timeout_ms, "per-attempt HTTP timeout")
        ->check(kPositiveInt)->capture_default_str();
    sub->add_option("--retries", j.retries, "total HTTP attempts")
        ->check(kPositiveInt)->capture_default_str();
}

std::unique_ptr<liveeval::JudgeClient> build_judge(
    const CLI::App* sub, const JudgeFlags& j, liveeval::Capability capability,
    const std::vector<liveeval::CandidateQuestion>& questions) {
    const bool mock_given = sub->count("--mock") > 0;
    const bool endpoint_given = sub->count("--endpoint") > 0;
    if (mock_given && endpoint_given)
        fail("choose one of --mock/--endpoint, not both");
    std::string mock = j.mock, endpoint = j.endpoint;
    if (mock_given) endpoint.clear();
    if (endpoint_given) mock.clear();
    if (!mock.empty() && !endpoint.empty())
        fail("config sets both a mock judge and an endpoint; pass --mock or --endpoint");
    if (mock.empty() && endpoint.empty())
        fail("choose a judge: --mock <name> or --endpoint <url>");

    if (!mock.empty()) {
        if (mock == "oracle")
            return std::make_unique<liveeval::OracleChoiceJudge>(questions);
        if (mock == "positional")
            return std::make_unique<liveeval::PositionalChoiceJudge>(0);
        if (mock == "yes" || mock == "no")
            return std::make_unique<liveeval::ConstantAgreementJudge>(mock);
        fail("unknown mock judge '" + mock + "'");
    }
    if (j.judge_model.empty())
        fail("--endpoint requires --judge-model");
    liveeval::HttpJudgeConfig hc;
    hc.endpoint = endpoint;
    hc.model = j.judge_model;
    hc.capability = capability;
    hc.token_env = j.token_env;
    hc.timeout_ms = j.timeout_ms;
    hc.retries = j.retries;
    return liveeval::make_http_judge(hc);
}

void print_filter_summary(const char* stage, const liveeval::FilterReport& report) {
    int undecided = 0;
    for (const auto& d : report.dispositions)
        if (d.disposition == liveeval::Disposition::undecided_kept) ++undecided;
    std::cout << stage << ": " << report.input_count << " questions, removed "
              << report.removed_blind + report.removed_agreement << ", kept "
              << report.retained;
    if (undecided > 0) std::cout << " (" << undecided << " kept undecided)";
    std::cout << "\n";
}

}  // namespace

int run(int argc, char** argv) {
    FileConfig cfg = load_file_config(argc, argv);

    CLI::App app{
        "benchmark maintenance: versioned outcome store, ability/difficulty "
        "fitting, score estimation, re-evaluation planning, question "
        "filtering, synthetic-world studies"};
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path, "JSON file with defaults (flags win)");

    liveeval::FitConfig fit_defaults;
    fit_defaults.max_iterations = cfg.get("fit", "max_iterations", fit_defaults.max_iterations);
    fit_defaults.tolerance = cfg.get("fit", "tolerance", fit_defaults.tolerance);
    fit_defaults.prior_variance = cfg.get("fit", "prior_variance", fit_defaults.prior_variance);
    const int budget_default = cfg.get("planner", "budget", 5);
    const double epsilon_default =
        cfg.get("planner", "similarity_epsilon", liveeval::kDefaultSimilarityEpsilon);

    // ---- store ----
    auto* store_cmd = app.add_subcommand("store", "inspect or mutate a store file");
    store_cmd->require_subcommand(1);
    store_cmd->fallthrough();

    struct {
        std::string path;
    } si;
    auto* store_init = store_cmd->add_subcommand("init", "create an empty store");
    store_init->fallthrough();
    store_init->add_option("--path", si.path, "store file");
    store_init->callback([&] {
        std::string path = need_store(si.path, cfg);
        liveeval::EvalStore::create().save(path);
        std::cout << "initialized empty store at " << path << "\n";
    });

    struct {
        std::string path, samples_file;
        std::vector<std::string> new_models, reeval_models, available;
    } sa;
    auto* store_add = store_cmd->add_subcommand("add-version", "append a benchmark version");
    store_add->fallthrough();
    store_add->add_option("--path", sa.path, "store file");
    store_add->add_option("--samples-file", sa.samples_file,
                          "CSV `sample_id,domain_tag`, chronological order")
        ->required();
    store_add->add_option("--new-models", sa.new_models, "models joining the roster")
        ->delimiter(',');
    store_add->add_option("--reeval-models", sa.reeval_models,
                          "existing models re-evaluated on this version")
        ->delimiter(',');
    store_add->add_option("--available", sa.available,
                          "models still usable (default: whole roster)")
        ->delimiter(',');
    store_add->callback([&] {
        std::string path = need_store(sa.path, cfg);
        auto store = liveeval::EvalStore::load(path);
        const auto& v = store.add_version(read_samples_csv(sa.samples_file),
                                          sa.new_models, sa.reeval_models,
                                          sa.available);
        store.save(path);
        std::cout << "version " << v.t << ": " << v.samples.size()
                  << " samples, " << sa.new_models.size() << " new models, "
                  << v.evaluated.size() - sa.new_models.size()
                  << " re-evaluated\n";
    });

    struct {
        std::string path, file;
    } sg;
    auto* store_ingest = store_cmd->add_subcommand(
        "ingest", "load an outcome file (may create versions)");
    store_ingest->fallthrough();
    store_ingest->add_option("--path", sg.path, "store file");
    store_ingest->add_option("--file", sg.file, "outcome CSV")->required();
    store_ingest->callback([&] {
        std::string path = need_store(sg.path, cfg);
        auto store = liveeval::EvalStore::load(path);
        auto result = store.ingest_outcome_file(sg.file);
        store.save(path);
        std::cout << "ingested " << result.recorded << " outcomes ("
                  << result.versions_created << " new versions) into " << path
                  << "\n";
    });

    struct {
        std::string path;
        int version = -1;
    } ss;
    auto* store_seal = store_cmd->add_subcommand(
        "seal", "verify a version has complete coverage");
    store_seal->fallthrough();
    store_seal->add_option("--path", ss.path, "store file");
    store_seal->add_option("--version", ss.version, "version index (default: latest)");
    store_seal->callback([&] {
        std::string path = need_store(ss.path, cfg);
        auto store = liveeval::EvalStore::load(path);
        int t = resolve_version(store, ss.version);
        if (!store.is_sealed(t))
            fail("version " + std::to_string(t) + " is not sealed: " +
                 std::to_string(store.missing_pairs(t)) + " outcomes missing");
        const auto& v = store.version(t);
        std::cout << "version " << t << " is sealed ("
                  << v.evaluated.size() * v.samples.size() << " outcomes)\n";
    });

    struct {
        std::string path, model;
        int version = -1;
    } sc;
    auto* store_score = store_cmd->add_subcommand(
        "score", "observed accuracy of one model on one version");
    store_score->fallthrough();
    store_score->add_option("--path", sc.path, "store file");
    store_score->add_option("--model", sc.model, "model id")->required();
    store_score->add_option("--version", sc.version, "version index (default: latest)");
    store_score->callback([&] {
        std::string path = need_store(sc.path, cfg);
        auto store = liveeval::EvalStore::load(path);
        int t = resolve_version(store, sc.version);
        double score = store.observed_score(sc.model, t);
        std::cout << "observed score for '" << sc.model << "' on version " << t
                  << ": " << strf("%.1f", score * 100.0) << "%\n";
    });

    // ---- fit ----
    struct {
        std::string store, out;
        int version = -1;
        liveeval::FitConfig config;
    } ft;
    ft.config = fit_defaults;
    auto* fit_cmd = app.add_subcommand(
        "fit", "fit abilities and difficulties over versions 0..t");
    fit_cmd->fallthrough();
    fit_cmd->add_option("--store", ft.store, "store file");
    fit_cmd->add_option("--version", ft.version,
                        "last version included (default: latest)");
    fit_cmd->add_option("--out", ft.out, "fit JSON to write")->required();
    fit_cmd->add_option("--max-iterations", ft.config.max_iterations)
        ->check(kPositiveInt)->capture_default_str();
    fit_cmd->add_option("--tolerance", ft.config.tolerance)->capture_default_str();
    fit_cmd->add_option("--prior-variance", ft.config.prior_variance)
        ->capture_default_str();
    fit_cmd->callback([&] {
        std::string path = need_store(ft.store, cfg);
        auto store = liveeval::EvalStore::load(path);
        int t = resolve_version(store, ft.version);
        auto fit = liveeval::fit(store, t, ft.config);
        liveeval::save_fit(fit, ft.out);
        std::cout << "fit over versions 0.." << t << ": "
                  << fit.model_ids.size() << " models, "
                  << fit.sample_ids.size() << " samples\n"
                  << "iterations " << fit.iterations << ", converged "
                  << (fit.converged ? "yes" : "no")
                  << ", penalized log-likelihood "
                  << strf("%.6f", fit.penalized_log_likelihood) << "\n"
                  << "wrote " << ft.out << "\n";
    });

    // ---- plan ----
    struct {
        std::string store, fit, out, costs_file;
        int budget = 5;
        double epsilon = liveeval::kDefaultSimilarityEpsilon;
        std::vector<std::string> new_models, available;
    } pl;
    pl.budget = budget_default;
    pl.epsilon = epsilon_default;
    auto* plan_cmd = app.add_subcommand(
        "plan", "pick anchors and the models to re-evaluate next version");
    plan_cmd->fallthrough();
    plan_cmd->add_option("--store", pl.store, "store file");
    plan_cmd->add_option("--fit", pl.fit, "fit JSON from `fit`")->required();
    plan_cmd->add_option("--budget", pl.budget, "models to re-evaluate")
        ->check(kPositiveInt)->capture_default_str();
    plan_cmd->add_option("--out", pl.out, "plan JSON to write")->required();
    plan_cmd->add_option("--new-models", pl.new_models,
                         "models joining at the planned version")
        ->delimiter(',');
    plan_cmd->add_option("--available", pl.available,
                         "candidate models (default: previous version's list)")
        ->delimiter(',');
    plan_cmd->add_option("--costs-file", pl.costs_file,
                         "CSV `model_id,relative_cost` for tie-breaking");
    plan_cmd->add_option("--similarity-epsilon", pl.epsilon,
                         "information slack treated as a tie")
        ->capture_default_str();
    plan_cmd->callback([&] {
        std::string path = need_store(pl.store, cfg);
        auto store = liveeval::EvalStore::load(path);
        auto fit = liveeval::load_fit(pl.fit);
        std::vector<liveeval::CostHint> costs;
        if (!pl.costs_file.empty()) costs = read_costs_csv(pl.costs_file);
        std::vector<std::string> available = pl.available;
        if (plan_cmd->count("--available") == 0)
            available = store.version(store.latest_version()).available;
        auto plan = liveeval::plan_reevaluation(store, fit, pl.budget,
                                                pl.new_models, available, costs,
                                                pl.epsilon);
        liveeval::save_plan(plan, pl.out);
        std::cout << "plan for version " << plan.version << ", budget "
                  << plan.budget << "\n"
                  << "anchors: " << join(plan.anchors) << "\n"
                  << "chosen models: " << join(plan.chosen_models) << "\n";
        if (!plan.forced_new_models.empty())
            std::cout << "forced new models: " << join(plan.forced_new_models)
                      << "\n";
        std::cout << "wrote " << pl.out << "\n";
    });

    // ---- estimate ----
    struct {
        std::string store, fit;
        int version = -1;
        std::vector<std::string> models;
    } es;
    auto* est_cmd = app.add_subcommand(
        "estimate", "scores from the fit (default: every non-evaluated model)");
    est_cmd->fallthrough();
    est_cmd->add_option("--store", es.store, "store file");
    est_cmd->add_option("--fit", es.fit, "fit JSON")->required();
    est_cmd->add_option("--version", es.version, "version index (default: latest)");
    est_cmd->add_option("--model", es.models, "specific model ids")->delimiter(',');
    est_cmd->callback([&] {
        std::string path = need_store(es.store, cfg);
        auto store = liveeval::EvalStore::load(path);
        auto fit = liveeval::load_fit(es.fit);
        int t = resolve_version(store, es.version);
        const auto& v = store.version(t);
        std::vector<std::string> models = es.models;
        if (models.empty())
            for (const auto& m : v.roster)
                if (!std::binary_search(v.evaluated.begin(), v.evaluated.end(), m))
                    models.push_back(m);
        std::cout << "model_id,score_percent,provenance\n";
        for (const auto& m : models) {
            if (!std::binary_search(v.roster.begin(), v.roster.end(), m))
                fail("model '" + m + "' is not on the version " +
                     std::to_string(t) + " roster");
            bool observed =
                std::binary_search(v.evaluated.begin(), v.evaluated.end(), m);
            double score = observed
                               ? store.observed_score(m, t)
                               : liveeval::estimate_score(store, m, t, fit);
            std::cout << m << "," << strf("%.1f", score * 100.0) << ","
                      << (observed ? "observed" : "estimated") << "\n";
        }
    });

    // ---- leaderboard ----
    struct {
        std::string store, fit, out;
        int version = -1;
    } lb;
    auto* lb_cmd = app.add_subcommand(
        "leaderboard", "ranked scores, observed and estimated");
    lb_cmd->fallthrough();
    lb_cmd->add_option("--store", lb.store, "store file");
    lb_cmd->add_option("--fit", lb.fit, "fit JSON")->required();
    lb_cmd->add_option("--version", lb.version, "version index (default: latest)");
    lb_cmd->add_option("--out", lb.out, "also write CSV here");
    lb_cmd->callback([&] {
        std::string path = need_store(lb.store, cfg);
        auto store = liveeval::EvalStore::load(path);
        auto fit = liveeval::load_fit(lb.fit);
        int t = resolve_version(store, lb.version);
        auto board = liveeval::build_leaderboard(store, t, fit);
        std::cout << liveeval::format_leaderboard_table(board);
        if (!lb.out.empty()) {
            liveeval::write_leaderboard_csv(board, lb.out);
            std::cout << "wrote " << lb.out << "\n";
        }
    });

    // ---- filter ----
    auto* filter_cmd = app.add_subcommand("filter", "screen candidate questions");
    filter_cmd->require_subcommand(1);
    filter_cmd->fallthrough();

    struct {
        std::string questions, report, kept_out;
        liveeval::BlindConfig config;
        JudgeFlags judge;
    } fb;
    fb.config.repeats = cfg.get("filters", "repeats", fb.config.repeats);
    fb.config.seed = cfg.get("filters", "seed", fb.config.seed);
    fb.config.parallelism = cfg.get("filters", "parallelism", fb.config.parallelism);
    fb.judge.mock = cfg.get("filters", "mock", std::string{});
    fb.judge.endpoint = cfg.get("filters", "endpoint", std::string{});
    fb.judge.judge_model = cfg.get("filters", "judge_model", std::string{});
    fb.judge.token_env = cfg.get("filters", "token_env", fb.judge.token_env);
    fb.judge.timeout_ms = cfg.get("filters", "timeout_ms", fb.judge.timeout_ms);
    fb.judge.retries = cfg.get("filters", "retries", fb.judge.retries);
    auto* filter_blind = filter_cmd->add_subcommand(
        "blind", "drop questions a judge answers correctly without the media");
    filter_blind->fallthrough();
    filter_blind->add_option("--questions", fb.questions, "candidate JSONL")
        ->required();
    filter_blind->add_option("--report", fb.report, "report JSON to write")
        ->required();
    filter_blind->add_option("--kept-out", fb.kept_out,
                             "write surviving questions as JSONL");
    filter_blind->add_option("--repeats", fb.config.repeats,
                             "shuffled repeats per question")
        ->check(kPositiveInt)->capture_default_str();
    filter_blind->add_option("--seed", fb.config.seed, "shuffle seed")
        ->capture_default_str();
    filter_blind->add_option("--parallelism", fb.config.parallelism,
                             "worker threads")
        ->check(kPositiveInt)->capture_default_str();
    add_judge_flags(filter_blind, fb.judge, {"oracle", "positional"});
    filter_blind->callback([&] {
        auto questions = liveeval::read_questions_jsonl(fb.questions);
        auto judge = build_judge(filter_blind, fb.judge,
                                 liveeval::Capability::text_only, questions);
        auto outcome =
            liveeval::blind_test(questions, *judge, fb.config, &std::cerr);
        auto report = liveeval::summarize(outcome);
        liveeval::write_filter_report(report, fb.report);
        print_filter_summary("blind test", report);
        std::cout << "wrote " << fb.report << "\n";
        if (!fb.kept_out.empty()) {
            liveeval::write_questions_jsonl(outcome.kept, fb.kept_out);
            std::cout << "wrote " << fb.kept_out << "\n";
        }
    });

    struct {
        std::string questions, report, kept_out;
        int parallelism = 1;
        JudgeFlags judge;
    } fa;
    fa.parallelism = cfg.get("filters", "parallelism", fa.parallelism);
    fa.judge = fb.judge;
    auto* filter_agree = filter_cmd->add_subcommand(
        "agreement", "drop questions whose labeled answer a judge rejects");
    filter_agree->fallthrough();
    filter_agree->add_option("--questions", fa.questions, "candidate JSONL")
        ->required();
    filter_agree->add_option("--report", fa.report, "report JSON to write")
        ->required();
    filter_agree->add_option("--kept-out", fa.kept_out,
                             "write surviving questions as JSONL");
    filter_agree->add_option("--parallelism", fa.parallelism, "worker threads")
        ->check(kPositiveInt)->capture_default_str();
    add_judge_flags(filter_agree, fa.judge, {"yes", "no"});
    filter_agree->callback([&] {
        auto questions = liveeval::read_questions_jsonl(fa.questions);
        auto judge = build_judge(filter_agree, fa.judge,
                                 liveeval::Capability::multimodal, questions);
        auto outcome = liveeval::agreement_filter(questions, *judge,
                                                  fa.parallelism, &std::cerr);
        auto report = liveeval::summarize(outcome);
        liveeval::write_filter_report(report, fa.report);
        print_filter_summary("agreement check", report);
        std::cout << "wrote " << fa.report << "\n";
        if (!fa.kept_out.empty()) {
            liveeval::write_questions_jsonl(outcome.kept, fa.kept_out);
            std::cout << "wrote " << fa.kept_out << "\n";
        }
    });

    // ---- simulate ----
    struct {
        WorldFlags world;
        int budget = 5;
        std::string report;
    } sim;
    sim.world = world_defaults(cfg);
    sim.budget = budget_default;
    auto* sim_cmd = app.add_subcommand(
        "simulate", "end-to-end protocol on synthetic worlds with known truth");
    sim_cmd->fallthrough();
    add_world_flags(sim_cmd, sim.world);
    sim_cmd->add_option("--budget", sim.budget, "models re-evaluated per world")
        ->check(kPositiveInt)->capture_default_str();
    sim_cmd->add_option("--report", sim.report, "detailed JSON report to write");
    sim_cmd->callback([&] {
        liveeval::EfficientEvalOptions opt;
        opt.train_fraction = sim.world.train_fraction;
        opt.fit = fit_defaults;
        std::vector<liveeval::ExperimentResult> runs;
        for (int k = 0; k < sim.world.seeds; ++k) {
            auto world = generate_world(
                world_config(sim.world, sim.world.seed_start + k));
            auto r = liveeval::run_efficient_eval(world, sim.budget, opt);
            std::cerr << "seed " << r.seed << ": "
                      << strf("mae %.4f, spearman %.4f", r.overall_mae_points,
                              r.spearman)
                      << "\n";
            runs.push_back(std::move(r));
        }
        std::cout << aggregate_table(runs) << savings_line(runs) << "\n";
        if (!sim.report.empty()) {
            nlohmann::json doc;
            doc["config"] = world_json(sim.world);
            doc["budget"] = sim.budget;
            doc["seeds"] = sim.world.seeds;
            doc["seed_start"] = sim.world.seed_start;
            auto per_seed = nlohmann::json::array();
            for (const auto& r : runs) per_seed.push_back(result_json(r));
            doc["per_seed"] = std::move(per_seed);
            doc["aggregate"] = aggregate_json(runs);
            write_json_file(doc, sim.report);
            std::cerr << "wrote " << sim.report << "\n";
        }
    });

    // ---- sweep ----
    struct {
        WorldFlags world;
        std::vector<int> budgets;
        std::string report;
    } sw;
    sw.world = world_defaults(cfg);
    auto* sweep_cmd = app.add_subcommand(
        "sweep", "simulate across several budgets on the same worlds");
    sweep_cmd->fallthrough();
    add_world_flags(sweep_cmd, sw.world);
    sweep_cmd->add_option("--budgets", sw.budgets, "budgets to compare")
        ->required()->delimiter(',');
    sweep_cmd->add_option("--report", sw.report, "detailed JSON report to write");
    sweep_cmd->callback([&] {
        if (sw.budgets.empty()) fail("--budgets must name at least one budget");
        liveeval::EfficientEvalOptions opt;
        opt.train_fraction = sw.world.train_fraction;
        opt.fit = fit_defaults;
        // runs[b][k]: budget index, then seed index
        std::vector<std::vector<liveeval::ExperimentResult>> runs(sw.budgets.size());
        for (int k = 0; k < sw.world.seeds; ++k) {
            auto world =
                generate_world(world_config(sw.world, sw.world.seed_start + k));
            auto results = liveeval::budget_sweep(world, sw.budgets, opt);
            for (std::size_t b = 0; b < results.size(); ++b)
                runs[b].push_back(std::move(results[b]));
            std::cerr << "seed " << sw.world.seed_start + k << ": done\n";
        }
        for (std::size_t b = 0; b < sw.budgets.size(); ++b) {
            if (b) std::cout << "\n";
            std::cout << "# budget " << sw.budgets[b] << "\n"
                      << aggregate_table(runs[b]) << savings_line(runs[b])
                      << "\n";
        }
        if (!sw.report.empty()) {
            nlohmann::json doc;
            doc["config"] = world_json(sw.world);
            doc["seeds"] = sw.world.seeds;
            doc["seed_start"] = sw.world.seed_start;
            auto blocks = nlohmann::json::array();
            for (std::size_t b = 0; b < sw.budgets.size(); ++b) {
                nlohmann::json block;
                block["budget"] = sw.budgets[b];
                block["aggregate"] = aggregate_json(runs[b]);
                auto per_seed = nlohmann::json::array();
                for (const auto& r : runs[b]) per_seed.push_back(result_json(r));
                block["per_seed"] = std::move(per_seed);
                blocks.push_back(std::move(block));
            }
            doc["budgets"] = std::move(blocks);
            write_json_file(doc, sw.report);
            std::cerr << "wrote " << sw.report << "\n";
        }
    });

    // ---- sample-size ----
    struct {
        WorldFlags world;
        std::vector<int> sizes;
        int budget = 5;
        std::string report;
    } sz;
    sz.world = world_defaults(cfg);
    sz.budget = budget_default;
    auto* size_cmd = app.add_subcommand(
        "sample-size", "estimation error vs. number of fresh questions");
    size_cmd->fallthrough();
    add_world_flags(size_cmd, sz.world);
    size_cmd->add_option("--sizes", sz.sizes, "test-split subsample sizes")
        ->required()->delimiter(',');
    size_cmd->add_option("--budget", sz.budget, "models re-evaluated per world")
        ->check(kPositiveInt)->capture_default_str();
    size_cmd->add_option("--report", sz.report, "detailed JSON report to write");
    size_cmd->callback([&] {
        if (sz.sizes.empty()) fail("--sizes must name at least one size");
        liveeval::EfficientEvalOptions opt;
        opt.train_fraction = sz.world.train_fraction;
        opt.fit = fit_defaults;
        // mae[s][k]: size index, then seed index
        std::vector<std::vector<double>> mae(sz.sizes.size());
        for (int k = 0; k < sz.world.seeds; ++k) {
            auto world =
                generate_world(world_config(sz.world, sz.world.seed_start + k));
            auto results =
                liveeval::sample_size_study(world, sz.sizes, sz.budget, opt);
            for (std::size_t s = 0; s < results.size(); ++s)
                mae[s].push_back(results[s].mae_points);
            std::cerr << "seed " << sz.world.seed_start + k << ": done\n";
        }
        std::cout << "size,mean_mae_points\n";
        nlohmann::json rows = nlohmann::json::array();
        for (std::size_t s = 0; s < sz.sizes.size(); ++s) {
            double mean = 0.0;
            for (double v : mae[s]) mean += v;
            mean /= static_cast<double>(mae[s].size());
            std::cout << sz.sizes[s] << "," << strf("%.4f", mean) << "\n";
            nlohmann::json row;
            row["size"] = sz.sizes[s];
            row["mean_mae_points"] = mean;
            row["per_seed_mae_points"] = mae[s];
            rows.push_back(std::move(row));
        }
        if (!sz.report.empty()) {
            nlohmann::json doc;
            doc["config"] = world_json(sz.world);
            doc["budget"] = sz.budget;
            doc["seeds"] = sz.world.seeds;
            doc["seed_start"] = sz.world.seed_start;
            doc["results"] = std::move(rows);
            write_json_file(doc, sz.report);
            std::cerr << "wrote " << sz.report << "\n";
        }
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);  // prints help or the usage error
        return code == 0 ? 0 : 2;
    }
    return 0;
}

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const liveeval::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
}
