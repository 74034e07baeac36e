#pragma once
#include <filesystem>
#include <string>
#include <vector>

#include "liveeval/eval_store.hpp"

namespace liveeval {

struct FitConfig {
    int max_iterations = 500;
    double tolerance = 1e-8;        // on max |Δparameter| per sweep
    double prior_variance = 100.0;  // zero-mean Gaussian penalty on every θ and β
};

// Fitted Rasch parameters. id lists are sorted; abilities/difficulties are
// parallel to them. The fit is a deterministic function of the outcome set
// and config (input order does not matter).
struct RaschFit {
    std::vector<std::string> model_ids;
    std::vector<std::string> sample_ids;
    std::vector<double> abilities;     // θ̂
    std::vector<double> difficulties;  // β̂
    double penalized_log_likelihood = 0.0;
    int iterations = 0;
    bool converged = false;  // last sweep's max |Δ| < tolerance

    // Penalized objective after each sweep, for diagnostics. Not serialized.
    std::vector<double> objective_trace;

    bool has_model(const std::string& model) const;
    bool has_sample(const std::string& sample) const;
    double ability(const std::string& model) const;      // errors when absent
    double difficulty(const std::string& sample) const;  // errors when absent
};

// P(correct) = 1/(1+exp(−(θ−β))), strictly inside (0,1). Rejects non-finite
// input.
double predict_prob(double theta, double beta);

// Σ over outcomes of y·log p + (1−y)·log(1−p); every referenced id must have
// a parameter.
double log_likelihood(const RaschFit& params,
                      const std::vector<EvalOutcome>& outcomes);

struct LogLikelihoodGradient {
    std::vector<double> d_theta;  // parallel to params.model_ids
    std::vector<double> d_beta;   // parallel to params.sample_ids
};
LogLikelihoodGradient log_likelihood_gradient(
    const RaschFit& params, const std::vector<EvalOutcome>& outcomes);

// Penalized MLE: maximizes log_likelihood − Σθ²/(2v) − Σβ²/(2v). Every model
// and sample in the outcome set must appear at least once; duplicates of the
// same (model, sample) pair are rejected.
RaschFit fit(const std::vector<EvalOutcome>& outcomes,
             const FitConfig& config = {});

// Fit over Ω_t of a store (versions 0..t must be sealed). Every declared
// model and sample must carry at least one observation.
RaschFit fit(const EvalStore& store, int t, const FitConfig& config = {});

void save_fit(const RaschFit& fit, const std::filesystem::path& path);
RaschFit load_fit(const std::filesystem::path& path);

}  // namespace liveeval
