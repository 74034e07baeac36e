#include "liveeval/rasch.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "liveeval/error.hpp"
#include "liveeval/kernels.hpp"

namespace liveeval {

namespace {

// log(1 + exp(η)) without overflow; exact for large |η|.
double softplus(double eta) {
    return std::max(eta, 0.0) + std::log1p(std::exp(-std::abs(eta)));
}

struct NeumaierSum {
    double sum = 0.0, comp = 0.0;
    void add(double v) {
        double t = sum + v;
        if (std::abs(sum) >= std::abs(v))
            comp += (sum - t) + v;
        else
            comp += (v - t) + sum;
        sum = t;
    }
    double value() const { return sum + comp; }
};

int find_sorted(const std::vector<std::string>& ids, const std::string& id) {
    auto it = std::lower_bound(ids.begin(), ids.end(), id);
    if (it == ids.end() || *it != id) return -1;
    return static_cast<int>(it - ids.begin());
}

// Canonical sparse layout of an outcome set: ids sorted, observations listed
// model-major and sample-major, each sorted by the counterpart index. Makes
// the fit a function of the set, not of input order.
struct ObsMatrix {
    std::vector<std::string> model_ids;   // sorted
    std::vector<std::string> sample_ids;  // sorted
    // model-major
    std::vector<std::size_t> m_off;  // size M+1
    std::vector<std::uint32_t> m_idx;
    std::vector<std::uint8_t> m_y;
    // sample-major
    std::vector<std::size_t> s_off;  // size N+1
    std::vector<std::uint32_t> s_idx;
    std::vector<std::uint8_t> s_y;
};

ObsMatrix build_matrix(const std::vector<EvalOutcome>& outcomes) {
    if (outcomes.empty()) fail("cannot fit on an empty observation set");
    ObsMatrix m;
    for (const auto& o : outcomes) {
        if (o.correct != 0 && o.correct != 1)
            fail("outcome for ('" + o.model + "','" + o.sample +
                 "') must be 0 or 1");
        m.model_ids.push_back(o.model);
        m.sample_ids.push_back(o.sample);
    }
    std::sort(m.model_ids.begin(), m.model_ids.end());
    m.model_ids.erase(std::unique(m.model_ids.begin(), m.model_ids.end()),
                      m.model_ids.end());
    std::sort(m.sample_ids.begin(), m.sample_ids.end());
    m.sample_ids.erase(std::unique(m.sample_ids.begin(), m.sample_ids.end()),
                       m.sample_ids.end());

    std::unordered_map<std::string, std::uint32_t> mi, si;
    for (std::uint32_t i = 0; i < m.model_ids.size(); ++i) mi[m.model_ids[i]] = i;
    for (std::uint32_t j = 0; j < m.sample_ids.size(); ++j)
        si[m.sample_ids[j]] = j;

    struct Cell {
        std::uint32_t i, j;
        std::uint8_t y;
    };
    std::vector<Cell> cells;
    cells.reserve(outcomes.size());
    for (const auto& o : outcomes)
        cells.push_back({mi.at(o.model), si.at(o.sample),
                         static_cast<std::uint8_t>(o.correct)});
    std::sort(cells.begin(), cells.end(), [](const Cell& a, const Cell& b) {
        return a.i != b.i ? a.i < b.i : a.j < b.j;
    });
    for (std::size_t k = 1; k < cells.size(); ++k)
        if (cells[k].i == cells[k - 1].i && cells[k].j == cells[k - 1].j)
            fail("duplicate observation for ('" + m.model_ids[cells[k].i] +
                 "','" + m.sample_ids[cells[k].j] + "')");

    std::size_t M = m.model_ids.size(), N = m.sample_ids.size();
    m.m_off.assign(M + 1, 0);
    for (const auto& c : cells) ++m.m_off[c.i + 1];
    for (std::size_t i = 0; i < M; ++i) m.m_off[i + 1] += m.m_off[i];
    m.m_idx.resize(cells.size());
    m.m_y.resize(cells.size());
    for (std::size_t k = 0; k < cells.size(); ++k) {
        m.m_idx[k] = cells[k].j;  // cells already (i, j)-sorted
        m.m_y[k] = cells[k].y;
    }

    m.s_off.assign(N + 1, 0);
    for (const auto& c : cells) ++m.s_off[c.j + 1];
    for (std::size_t j = 0; j < N; ++j) m.s_off[j + 1] += m.s_off[j];
    std::vector<std::size_t> cursor(m.s_off.begin(), m.s_off.end() - 1);
    m.s_idx.resize(cells.size());
    m.s_y.resize(cells.size());
    for (const auto& c : cells) {  // (i,j) order → per-sample lists i-sorted
        std::size_t k = cursor[c.j]++;
        m.s_idx[k] = c.i;
        m.s_y[k] = c.y;
    }
    return m;
}

double penalized_objective(const ObsMatrix& m, const std::vector<double>& theta,
                           const std::vector<double>& beta,
                           double prior_variance) {
    NeumaierSum acc;
    for (std::size_t i = 0; i + 1 < m.m_off.size(); ++i)
        for (std::size_t k = m.m_off[i]; k < m.m_off[i + 1]; ++k) {
            double eta = theta[i] - beta[m.m_idx[k]];
            acc.add(m.m_y[k] ? eta - softplus(eta) : -softplus(eta));
        }
    double pen = 0.0;
    for (double v : theta) pen += v * v;
    for (double v : beta) pen += v * v;
    return acc.value() - pen / (2.0 * prior_variance);
}

void check_config(const FitConfig& c) {
    if (c.max_iterations < 1) fail("max_iterations must be positive");
    if (!(c.tolerance > 0.0) || !std::isfinite(c.tolerance))
        fail("tolerance must be positive");
    if (!(c.prior_variance > 0.0) || !std::isfinite(c.prior_variance))
        fail("prior_variance must be positive");
}

void append_json_string(std::string& out, const std::string& s) {
    out += '"';
    for (char ch : s) {
        switch (ch) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            case '\t': out += "\\t"; break;
            default:
                if (static_cast<unsigned char>(ch) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof buf, "\\u%04x",
                                  static_cast<unsigned>(ch));
                    out += buf;
                } else {
                    out += ch;
                }
        }
    }
    out += '"';
}

void append_number(std::string& out, double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out += buf;
}

}  // namespace

bool RaschFit::has_model(const std::string& model) const {
    return find_sorted(model_ids, model) >= 0;
}

bool RaschFit::has_sample(const std::string& sample) const {
    return find_sorted(sample_ids, sample) >= 0;
}

double RaschFit::ability(const std::string& model) const {
    int i = find_sorted(model_ids, model);
    if (i < 0) fail("no ability for model '" + model + "'");
    return abilities[static_cast<std::size_t>(i)];
}

double RaschFit::difficulty(const std::string& sample) const {
    int j = find_sorted(sample_ids, sample);
    if (j < 0) fail("no difficulty for sample '" + sample + "'");
    return difficulties[static_cast<std::size_t>(j)];
}

double predict_prob(double theta, double beta) {
    if (!std::isfinite(theta) || !std::isfinite(beta))
        fail("predict_prob requires finite parameters");
    return kernels::sigmoid1(theta - beta);
}

double log_likelihood(const RaschFit& params,
                      const std::vector<EvalOutcome>& outcomes) {
    NeumaierSum acc;
    for (const auto& o : outcomes) {
        if (o.correct != 0 && o.correct != 1)
            fail("outcome for ('" + o.model + "','" + o.sample +
                 "') must be 0 or 1");
        double eta = params.ability(o.model) - params.difficulty(o.sample);
        acc.add(o.correct ? eta - softplus(eta) : -softplus(eta));
    }
    return acc.value();
}

LogLikelihoodGradient log_likelihood_gradient(
    const RaschFit& params, const std::vector<EvalOutcome>& outcomes) {
    LogLikelihoodGradient g;
    g.d_theta.assign(params.model_ids.size(), 0.0);
    g.d_beta.assign(params.sample_ids.size(), 0.0);
    for (const auto& o : outcomes) {
        if (o.correct != 0 && o.correct != 1)
            fail("outcome for ('" + o.model + "','" + o.sample +
                 "') must be 0 or 1");
        int i = find_sorted(params.model_ids, o.model);
        if (i < 0) fail("no ability for model '" + o.model + "'");
        int j = find_sorted(params.sample_ids, o.sample);
        if (j < 0) fail("no difficulty for sample '" + o.sample + "'");
        double p = kernels::sigmoid1(params.abilities[static_cast<std::size_t>(i)] -
                            params.difficulties[static_cast<std::size_t>(j)]);
        double r = static_cast<double>(o.correct) - p;
        g.d_theta[static_cast<std::size_t>(i)] += r;
        g.d_beta[static_cast<std::size_t>(j)] -= r;
    }
    return g;
}

RaschFit fit(const std::vector<EvalOutcome>& outcomes, const FitConfig& config) {
    check_config(config);
    ObsMatrix m = build_matrix(outcomes);
    const std::size_t M = m.model_ids.size(), N = m.sample_ids.size();
    const kernels::Ops& ops = kernels::active_ops();
    const double inv_var = 1.0 / config.prior_variance;

    // Start at the logit of each observed accuracy, clipped so perfect
    // rows/columns stay finite.
    std::vector<double> theta(M), beta(N);
    for (std::size_t i = 0; i < M; ++i) {
        double correct = 0.0;
        for (std::size_t k = m.m_off[i]; k < m.m_off[i + 1]; ++k)
            correct += m.m_y[k];
        double acc = correct / static_cast<double>(m.m_off[i + 1] - m.m_off[i]);
        theta[i] = std::clamp(std::log(acc / (1.0 - acc)), -3.0, 3.0);
    }
    for (std::size_t j = 0; j < N; ++j) {
        double correct = 0.0;
        for (std::size_t k = m.s_off[j]; k < m.s_off[j + 1]; ++k)
            correct += m.s_y[k];
        double acc = correct / static_cast<double>(m.s_off[j + 1] - m.s_off[j]);
        beta[j] = std::clamp(-std::log(acc / (1.0 - acc)), -3.0, 3.0);
    }

    RaschFit result;
    for (int sweep = 1; sweep <= config.max_iterations; ++sweep) {
        double max_delta = 0.0;
        // One Newton step per ability. p = σ(θ_i − β_j), gradient Σ(y−p) − θ/v,
        // curvature Σ p(1−p) + 1/v; the ±1 clamp keeps early steps stable.
        for (std::size_t i = 0; i < M; ++i) {
            double gy, h;
            ops.coord_residual(theta[i], -1.0, beta.data(),
                               m.m_idx.data() + m.m_off[i],
                               m.m_y.data() + m.m_off[i],
                               m.m_off[i + 1] - m.m_off[i], &gy, &h);
            double step = std::clamp((gy - theta[i] * inv_var) / (h + inv_var),
                                     -1.0, 1.0);
            theta[i] += step;
            max_delta = std::max(max_delta, std::abs(step));
        }
        // Same for difficulties; dLL/dβ_j = Σ(p−y) = −gy.
        for (std::size_t j = 0; j < N; ++j) {
            double gy, h;
            ops.coord_residual(-beta[j], 1.0, theta.data(),
                               m.s_idx.data() + m.s_off[j],
                               m.s_y.data() + m.s_off[j],
                               m.s_off[j + 1] - m.s_off[j], &gy, &h);
            double step = std::clamp((-gy - beta[j] * inv_var) / (h + inv_var),
                                     -1.0, 1.0);
            beta[j] += step;
            max_delta = std::max(max_delta, std::abs(step));
        }
        // The likelihood is flat along (θ+c, β+c); only the penalty curves
        // that direction, so coordinate steps crawl along it. Jump straight
        // to the exact optimum of the penalty over c.
        double total = 0.0;
        for (double v : theta) total += v;
        for (double v : beta) total += v;
        double c = -total / static_cast<double>(M + N);
        for (double& v : theta) v += c;
        for (double& v : beta) v += c;
        max_delta = std::max(max_delta, std::abs(c));

        result.objective_trace.push_back(
            penalized_objective(m, theta, beta, config.prior_variance));
        result.iterations = sweep;
        if (max_delta < config.tolerance) {
            result.converged = true;
            break;
        }
    }

    result.model_ids = std::move(m.model_ids);
    result.sample_ids = std::move(m.sample_ids);
    result.abilities = std::move(theta);
    result.difficulties = std::move(beta);
    result.penalized_log_likelihood = result.objective_trace.back();
    return result;
}

RaschFit fit(const EvalStore& store, int t, const FitConfig& config) {
    std::vector<EvalOutcome> outcomes = store.observed_outcomes(t);
    // Every declared model and sample must actually carry observations.
    std::unordered_map<std::string, bool> models_seen, samples_seen;
    for (int u = 0; u <= t; ++u) {
        const auto& v = store.version(u);
        for (const auto& id : v.evaluated) models_seen.emplace(id, false);
        for (const auto& id : v.samples) samples_seen.emplace(id, false);
    }
    for (const auto& o : outcomes) {
        models_seen[o.model] = true;
        samples_seen[o.sample] = true;
    }
    for (const auto& [id, seen] : models_seen)
        if (!seen) fail("model '" + id + "' has no observed outcomes");
    for (const auto& [id, seen] : samples_seen)
        if (!seen) fail("sample '" + id + "' has no observed outcomes");
    return fit(outcomes, config);
}

void save_fit(const RaschFit& fit, const std::filesystem::path& path) {
    std::string out;
    out += "{\n  \"abilities\": {";
    for (std::size_t i = 0; i < fit.model_ids.size(); ++i) {
        out += i ? ",\n    " : "\n    ";
        append_json_string(out, fit.model_ids[i]);
        out += ": ";
        append_number(out, fit.abilities[i]);
    }
    out += "\n  },\n  \"difficulties\": {";
    for (std::size_t j = 0; j < fit.sample_ids.size(); ++j) {
        out += j ? ",\n    " : "\n    ";
        append_json_string(out, fit.sample_ids[j]);
        out += ": ";
        append_number(out, fit.difficulties[j]);
    }
    out += "\n  },\n  \"penalized_log_likelihood\": ";
    append_number(out, fit.penalized_log_likelihood);
    out += ",\n  \"iterations\": " + std::to_string(fit.iterations);
    out += ",\n  \"converged\": ";
    out += fit.converged ? "true" : "false";
    out += "\n}\n";
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) fail("cannot write '" + path.string() + "'");
    f << out;
    if (!f) fail("write failed for '" + path.string() + "'");
}

RaschFit load_fit(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("cannot open '" + path.string() + "'");
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        fail("failed to parse '" + path.string() + "': " + e.what());
    }
    RaschFit fit;
    try {
        for (const auto& [id, v] : doc.at("abilities").items()) {
            fit.model_ids.push_back(id);  // object keys iterate sorted
            fit.abilities.push_back(v.get<double>());
        }
        for (const auto& [id, v] : doc.at("difficulties").items()) {
            fit.sample_ids.push_back(id);
            fit.difficulties.push_back(v.get<double>());
        }
        fit.penalized_log_likelihood =
            doc.at("penalized_log_likelihood").get<double>();
        fit.iterations = doc.at("iterations").get<int>();
        fit.converged = doc.at("converged").get<bool>();
    } catch (const nlohmann::json::exception& e) {
        fail("malformed fit file '" + path.string() + "': " + e.what());
    }
    for (double v : fit.abilities)
        if (!std::isfinite(v)) fail("non-finite ability in '" + path.string() + "'");
    for (double v : fit.difficulties)
        if (!std::isfinite(v))
            fail("non-finite difficulty in '" + path.string() + "'");
    return fit;
}

}  // namespace liveeval
