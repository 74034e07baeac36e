#include "liveeval/eval_store.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "liveeval/error.hpp"

namespace liveeval {

namespace {

using nlohmann::json;

void check_id(const std::string& id, const char* what) {
    if (id.empty()) fail(std::string(what) + " id must be nonempty");
    if (id.find_first_of(",\n\r") != std::string::npos)
        fail(std::string(what) + " id '" + id +
             "' must not contain commas or newlines");
}

std::vector<std::string> sorted_unique(std::vector<std::string> v,
                                       const char* what) {
    std::sort(v.begin(), v.end());
    auto dup = std::adjacent_find(v.begin(), v.end());
    if (dup != v.end()) fail(std::string("duplicate ") + what + " '" + *dup + "'");
    return v;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

void EvalStore::check_version(int t) const {
    if (t < 0 || t >= num_versions())
        fail("no such version: " + std::to_string(t));
}

int EvalStore::latest_version() const {
    if (versions_.empty()) fail("store has no versions");
    return num_versions() - 1;
}

const BenchmarkVersion& EvalStore::version(int t) const {
    check_version(t);
    return versions_[static_cast<std::size_t>(t)];
}

const BenchmarkVersion& EvalStore::add_version(
    const std::vector<SampleInfo>& samples,
    const std::vector<std::string>& new_models,
    const std::vector<std::string>& reevaluated_old_models,
    const std::vector<std::string>& available) {
    int t = num_versions();

    // Samples: nonempty ids, unique within the batch, never seen before.
    std::vector<std::string> sample_ids;
    sample_ids.reserve(samples.size());
    std::unordered_set<std::string> batch_ids;
    for (const auto& s : samples) {
        check_id(s.id, "sample");
        if (!batch_ids.insert(s.id).second)
            fail("duplicate sample id '" + s.id + "' in batch");
        if (sample_version_.count(s.id))
            fail("sample id reused: '" + s.id + "' already in version " +
                 std::to_string(sample_version_.at(s.id)));
        sample_ids.push_back(s.id);
    }

    for (const auto& m : new_models) check_id(m, "model");
    std::vector<std::string> new_sorted = sorted_unique(new_models, "model");
    for (const auto& m : new_sorted)
        if (roster_all_.count(m)) fail("model '" + m + "' is already in the roster");

    std::vector<std::string> reeval_sorted =
        sorted_unique(reevaluated_old_models, "model");
    if (t == 0 && !reeval_sorted.empty())
        fail("version 0 cannot re-evaluate: every model is evaluated in full");
    for (const auto& m : reeval_sorted)
        if (!roster_all_.count(m))
            fail("unknown re-evaluated model '" + m + "'");

    BenchmarkVersion v;
    v.t = t;
    v.samples = std::move(sample_ids);
    if (t == 0) {
        v.roster = new_sorted;
    } else {
        v.roster = versions_.back().roster;
        v.roster.insert(v.roster.end(), new_sorted.begin(), new_sorted.end());
        std::sort(v.roster.begin(), v.roster.end());
    }
    if (t == 0) {
        v.evaluated = v.roster;  // Î_0 = I_0
    } else {
        v.evaluated = new_sorted;
        v.evaluated.insert(v.evaluated.end(), reeval_sorted.begin(),
                           reeval_sorted.end());
        std::sort(v.evaluated.begin(), v.evaluated.end());
    }
    if (available.empty()) {
        v.available = v.roster;
    } else {
        v.available = sorted_unique(available, "model");
        std::unordered_set<std::string> roster_set(v.roster.begin(),
                                                   v.roster.end());
        for (const auto& m : v.available)
            if (!roster_set.count(m))
                fail("available model '" + m + "' is not in the roster");
    }

    for (const auto& s : samples) {
        sample_version_[s.id] = t;
        sample_domain_[s.id] = s.domain_tag;
    }
    roster_all_.insert(v.roster.begin(), v.roster.end());
    evaluated_sets_.emplace_back(v.evaluated.begin(), v.evaluated.end());
    recorded_counts_.push_back(0);
    versions_.push_back(std::move(v));
    return versions_.back();
}

int EvalStore::record_outcomes(int t, const std::vector<EvalOutcome>& batch) {
    check_version(t);
    const auto& evaluated = evaluated_sets_[static_cast<std::size_t>(t)];
    int recorded = 0;
    for (const auto& o : batch) {
        if (o.correct != 0 && o.correct != 1)
            fail("outcome for ('" + o.model + "','" + o.sample +
                 "') must be 0 or 1");
        auto sv = sample_version_.find(o.sample);
        if (sv == sample_version_.end() || sv->second != t)
            fail("sample '" + o.sample + "' is not in version " +
                 std::to_string(t));
        if (!evaluated.count(o.model))
            fail("model '" + o.model + "' not scheduled for evaluation in version " +
                 std::to_string(t));
        auto key = std::make_pair(o.model, o.sample);
        auto it = outcomes_.find(key);
        if (it != outcomes_.end()) {
            if (it->second != o.correct)
                fail("outcome conflict for ('" + o.model + "','" + o.sample +
                     "'): recorded " + std::to_string(it->second) +
                     ", got " + std::to_string(o.correct));
            continue;  // identical re-record is a no-op
        }
        outcomes_.emplace(std::move(key), o.correct);
        ++recorded_counts_[static_cast<std::size_t>(t)];
        ++recorded;
    }
    return recorded;
}

bool EvalStore::is_sealed(int t) const { return missing_pairs(t) == 0; }

std::size_t EvalStore::missing_pairs(int t) const {
    check_version(t);
    const auto& v = versions_[static_cast<std::size_t>(t)];
    std::size_t want = v.evaluated.size() * v.samples.size();
    return want - recorded_counts_[static_cast<std::size_t>(t)];
}

double EvalStore::observed_score(const std::string& model, int t) const {
    check_version(t);
    const auto& v = versions_[static_cast<std::size_t>(t)];
    if (!evaluated_sets_[static_cast<std::size_t>(t)].count(model))
        fail("model '" + model + "' is not in the evaluated set of version " +
             std::to_string(t));
    if (v.samples.empty())
        fail("version " + std::to_string(t) + " has no samples");
    long sum = 0;
    for (const auto& s : v.samples) {
        auto it = outcomes_.find(std::make_pair(model, s));
        if (it == outcomes_.end())
            fail("model '" + model + "' not fully evaluated on version " +
                 std::to_string(t));
        sum += it->second;
    }
    return static_cast<double>(sum) / static_cast<double>(v.samples.size());
}

std::vector<std::pair<std::string, std::string>> EvalStore::observed_pairs(
    int t) const {
    check_version(t);
    std::vector<std::pair<std::string, std::string>> pairs;
    for (int u = 0; u <= t; ++u) {
        const auto& v = versions_[static_cast<std::size_t>(u)];
        for (const auto& m : v.evaluated)
            for (const auto& s : v.samples) pairs.emplace_back(m, s);
    }
    return pairs;
}

std::vector<EvalOutcome> EvalStore::observed_outcomes(int t) const {
    check_version(t);
    for (int u = 0; u <= t; ++u)
        if (!is_sealed(u))
            fail("version " + std::to_string(u) + " is not sealed (" +
                 std::to_string(missing_pairs(u)) + " outcomes missing)");
    std::vector<EvalOutcome> out;
    for (int u = 0; u <= t; ++u) {
        const auto& v = versions_[static_cast<std::size_t>(u)];
        for (const auto& m : v.evaluated)
            for (const auto& s : v.samples)
                out.push_back({m, s, outcomes_.at(std::make_pair(m, s))});
    }
    return out;
}

std::optional<int> EvalStore::outcome(const std::string& model,
                                      const std::string& sample) const {
    auto it = outcomes_.find(std::make_pair(model, sample));
    if (it == outcomes_.end()) return std::nullopt;
    return it->second;
}

const std::string& EvalStore::domain_of(const std::string& sample) const {
    auto it = sample_domain_.find(sample);
    if (it == sample_domain_.end()) fail("unknown sample '" + sample + "'");
    return it->second;
}

void EvalStore::save(const std::filesystem::path& path) const {
    json doc;
    doc["versions"] = json::array();
    for (const auto& v : versions_) {
        json jv;
        jv["t"] = v.t;
        jv["samples"] = json::array();
        for (const auto& s : v.samples)
            jv["samples"].push_back(
                {{"id", s}, {"domain_tag", sample_domain_.at(s)}});
        jv["roster"] = v.roster;
        jv["evaluated"] = v.evaluated;
        jv["available"] = v.available;
        doc["versions"].push_back(std::move(jv));
    }
    doc["outcomes"] = json::array();
    for (const auto& [key, correct] : outcomes_)
        doc["outcomes"].push_back(
            {{"model", key.first}, {"sample", key.second}, {"correct", correct}});
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail("cannot write '" + path.string() + "'");
    out << doc.dump(2) << '\n';
    if (!out) fail("write failed for '" + path.string() + "'");
}

EvalStore EvalStore::load(const std::filesystem::path& path) {
    std::string text = read_file(path);
    if (text.find_first_not_of(" \t\r\n") == std::string::npos)
        return EvalStore{};  // empty file → empty store
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        fail("failed to parse '" + path.string() + "': " + e.what());
    }

    EvalStore store;
    try {
        std::vector<std::string> prev_roster;
        for (const auto& jv : doc.value("versions", json::array())) {
            std::vector<SampleInfo> samples;
            for (const auto& js : jv.at("samples"))
                samples.push_back({js.at("id").get<std::string>(),
                                   js.value("domain_tag", std::string{})});
            std::vector<std::string> roster =
                jv.at("roster").get<std::vector<std::string>>();
            std::vector<std::string> evaluated =
                jv.at("evaluated").get<std::vector<std::string>>();
            std::vector<std::string> available =
                jv.at("available").get<std::vector<std::string>>();
            std::sort(roster.begin(), roster.end());
            std::sort(evaluated.begin(), evaluated.end());

            // Recover the add_version arguments, then replay through the
            // guarded path so every invariant is revalidated on load.
            std::vector<std::string> new_models;
            std::set_difference(roster.begin(), roster.end(),
                                prev_roster.begin(), prev_roster.end(),
                                std::back_inserter(new_models));
            std::vector<std::string> reeval;
            std::set_difference(evaluated.begin(), evaluated.end(),
                                new_models.begin(), new_models.end(),
                                std::back_inserter(reeval));
            const auto& added =
                store.add_version(samples, new_models, reeval, available);
            if (added.t != jv.at("t").get<int>() || added.roster != roster ||
                added.evaluated != evaluated)
                fail("inconsistent version record for t=" +
                     std::to_string(added.t));
            prev_roster = roster;
        }
        std::vector<std::vector<EvalOutcome>> per_version(
            static_cast<std::size_t>(store.num_versions()));
        for (const auto& jo : doc.value("outcomes", json::array())) {
            EvalOutcome o{jo.at("model").get<std::string>(),
                          jo.at("sample").get<std::string>(),
                          jo.at("correct").get<int>()};
            auto it = store.sample_version_.find(o.sample);
            if (it == store.sample_version_.end())
                fail("outcome references unknown sample '" + o.sample + "'");
            per_version[static_cast<std::size_t>(it->second)].push_back(
                std::move(o));
        }
        for (int t = 0; t < store.num_versions(); ++t)
            store.record_outcomes(t, per_version[static_cast<std::size_t>(t)]);
    } catch (const json::exception& e) {
        fail("malformed store file '" + path.string() + "': " + e.what());
    }
    return store;
}

EvalStore::IngestResult EvalStore::ingest_outcome_file(
    const std::filesystem::path& path) {
    std::string text = read_file(path);
    std::istringstream in(text);
    std::string line;
    int line_no = 0;

    auto line_fail = [&](const std::string& msg) {
        fail(path.string() + " line " + std::to_string(line_no) + ": " + msg);
    };

    if (!std::getline(in, line)) fail(path.string() + ": empty outcome file");
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "version,model_id,sample_id,correct")
        line_fail("expected header 'version,model_id,sample_id,correct'");

    struct Row {
        int line_no;
        int t;
        std::string model, sample;
        int correct;
    };
    std::vector<Row> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::array<std::string, 4> f;
        std::size_t start = 0, field = 0;
        for (std::size_t i = 0; i <= line.size(); ++i) {
            if (i == line.size() || line[i] == ',') {
                if (field >= 4) line_fail("expected 4 comma-separated fields");
                f[field++] = line.substr(start, i - start);
                start = i + 1;
            }
        }
        if (field != 4) line_fail("expected 4 comma-separated fields");
        int t = 0;
        try {
            std::size_t pos = 0;
            t = std::stoi(f[0], &pos);
            if (pos != f[0].size()) throw std::invalid_argument(f[0]);
        } catch (const std::exception&) {
            line_fail("bad version number '" + f[0] + "'");
        }
        if (t < 0) line_fail("version must be non-negative");
        if (f[1].empty()) line_fail("empty model id");
        if (f[2].empty()) line_fail("empty sample id");
        int correct = 0;
        if (f[3] == "0")
            correct = 0;
        else if (f[3] == "1")
            correct = 1;
        else
            line_fail("correct must be 0 or 1, got '" + f[3] + "'");
        rows.push_back({line_no, t, std::move(f[1]), std::move(f[2]), correct});
    }

    std::vector<int> ts;
    for (const auto& r : rows) ts.push_back(r.t);
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());

    IngestResult result;
    for (int t : ts) {
        std::vector<const Row*> vrows;
        for (const auto& r : rows)
            if (r.t == t) vrows.push_back(&r);
        if (t >= num_versions()) {
            if (t != num_versions())
                fail(path.string() + ": version numbers must be contiguous (got " +
                     std::to_string(t) + ", expected " +
                     std::to_string(num_versions()) + ")");
            // First-occurrence order preserves any chronology in the file.
            std::vector<SampleInfo> samples;
            std::unordered_set<std::string> seen_samples;
            std::vector<std::string> models;
            std::unordered_set<std::string> seen_models;
            for (const Row* r : vrows) {
                if (seen_samples.insert(r->sample).second)
                    samples.push_back({r->sample, ""});
                if (seen_models.insert(r->model).second) models.push_back(r->model);
            }
            std::vector<std::string> new_models, reeval;
            for (const auto& m : models)
                (roster_all_.count(m) ? reeval : new_models).push_back(m);
            try {
                add_version(samples, new_models, reeval);
            } catch (const Error& e) {
                fail(path.string() + ": while building version " +
                     std::to_string(t) + ": " + e.what());
            }
            ++result.versions_created;
        }
        for (const Row* r : vrows) {
            try {
                result.recorded +=
                    record_outcomes(t, {{r->model, r->sample, r->correct}});
            } catch (const Error& e) {
                fail(path.string() + " line " + std::to_string(r->line_no) +
                     ": " + e.what());
            }
        }
    }
    return result;
}

}  // namespace liveeval
