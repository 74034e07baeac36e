#pragma once
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace liveeval {

struct SampleInfo {
    std::string id;
    std::string domain_tag;  // "" = untagged; only used for per-domain reporting

    bool operator==(const SampleInfo&) const = default;
};

struct EvalOutcome {
    std::string model;
    std::string sample;
    int correct = 0;  // 0 or 1

    bool operator==(const EvalOutcome&) const = default;
};

struct BenchmarkVersion {
    int t = 0;
    std::vector<std::string> samples;    // J_t, in insertion (chronological) order
    std::vector<std::string> roster;     // I_t, sorted
    std::vector<std::string> evaluated;  // Î_t ⊆ I_t, sorted
    std::vector<std::string> available;  // ⊆ I_t, sorted

    bool operator==(const BenchmarkVersion&) const = default;
};

// Versioned record of which model answered which sample correctly.
// Append-only evidence: sample ids never repeat across versions, the roster
// never shrinks, and a recorded outcome cannot be overwritten with a
// different value. A version is "sealed" once every pair in
// evaluated × samples has an outcome; fitting and planning require sealed
// versions. Queries are pure; mutations must be externally serialized
// (single-writer, multiple-reader).
class EvalStore {
public:
    static EvalStore create() { return EvalStore{}; }

    // Appends version t = (previous t + 1, or 0). At t=0,
    // reevaluated_old_models must be empty and every model is evaluated
    // (Î_0 = I_0). `available` defaults to the whole roster at t.
    const BenchmarkVersion& add_version(
        const std::vector<SampleInfo>& samples,
        const std::vector<std::string>& new_models,
        const std::vector<std::string>& reevaluated_old_models,
        const std::vector<std::string>& available = {});

    // Records a batch of outcomes for version t; returns how many were new.
    // Re-recording an identical value is a no-op; a conflicting value is an
    // error.
    int record_outcomes(int t, const std::vector<EvalOutcome>& batch);

    // Mean correctness of `model` over J_t; requires full coverage.
    double observed_score(const std::string& model, int t) const;

    // Ω_t = ∪_{t'<=t} Î_{t'} × J_{t'}, in (version, model, sample) order.
    std::vector<std::pair<std::string, std::string>> observed_pairs(int t) const;

    // Ω_t with recorded values; requires versions 0..t to be sealed.
    std::vector<EvalOutcome> observed_outcomes(int t) const;

    bool is_sealed(int t) const;
    std::size_t missing_pairs(int t) const;

    int num_versions() const { return static_cast<int>(versions_.size()); }
    int latest_version() const;  // errors when the store is empty
    const BenchmarkVersion& version(int t) const;
    const std::vector<BenchmarkVersion>& versions() const { return versions_; }

    std::optional<int> outcome(const std::string& model,
                               const std::string& sample) const;
    // Domain tag of a known sample ("" when untagged).
    const std::string& domain_of(const std::string& sample) const;

    void save(const std::filesystem::path& path) const;
    static EvalStore load(const std::filesystem::path& path);

    // Line-delimited outcome file (header `version,model_id,sample_id,correct`).
    // On an empty store this bootstraps versions 0..T from the rows (models
    // first seen at t are new models, returning ones are re-evaluations, and
    // `available` defaults to the full roster). On a nonempty store, rows may
    // add outcomes to existing version blocks or append subsequent versions.
    struct IngestResult {
        int recorded = 0;
        int versions_created = 0;
    };
    IngestResult ingest_outcome_file(const std::filesystem::path& path);

    bool operator==(const EvalStore& other) const {
        return versions_ == other.versions_ && outcomes_ == other.outcomes_;
    }

private:
    std::vector<BenchmarkVersion> versions_;
    std::map<std::pair<std::string, std::string>, int> outcomes_;

    // Derived indexes.
    std::unordered_map<std::string, int> sample_version_;
    std::unordered_map<std::string, std::string> sample_domain_;
    std::unordered_set<std::string> roster_all_;
    std::vector<std::unordered_set<std::string>> evaluated_sets_;
    std::vector<std::size_t> recorded_counts_;

    void check_version(int t) const;
};

}  // namespace liveeval
