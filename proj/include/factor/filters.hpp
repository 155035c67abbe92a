#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "factor/common.hpp"
#include "factor/corpus.hpp"
#include "factor/gateway.hpp"
#include "factor/prompting.hpp"

namespace factor {

struct FilterConfig {
    double tau_nli = 0.6;        // contradiction-probability threshold
    double tau_nli_coref = 0.3;  // relaxed threshold for coreference candidates
    double tau_lm = 0.2;         // fluency margin, nats per token
    size_t near_context_tokens = 64;  // length of the t_near prefix tail

    void validate() const {
        if (tau_nli < 0.0 || tau_nli > 1.0 || tau_nli_coref < 0.0 || tau_nli_coref > 1.0)
            throw std::invalid_argument("nli thresholds must be in [0,1]");
        if (tau_lm < 0.0) throw std::invalid_argument("tau_lm must be non-negative");
    }
};

struct FilterScores {
    double p_contradiction = 0.0;
    double mean_logprob_candidate = 0.0;
    double mean_logprob_original = 0.0;
    bool passed_nli = false;
    bool passed_lm = false;
};

// Decision rules, split out from the endpoint calls so cached scores replay
// to bit-identical decisions. Both thresholds are strict inequalities.

inline double applicable_nli_threshold(const FilterConfig& cfg, ErrorType type) {
    return type == ErrorType::Coreference ? cfg.tau_nli_coref : cfg.tau_nli;
}

inline bool nli_decision(double p_contradiction, ErrorType type, const FilterConfig& cfg) {
    return p_contradiction > applicable_nli_threshold(cfg, type);
}

inline bool lm_decision(double mean_lp_candidate, double mean_lp_original,
                        const FilterConfig& cfg) {
    return mean_lp_candidate > mean_lp_original - cfg.tau_lm;
}

// Premise [t_near; c+] and hypothesis [t_near; c] share the identical
// near-context string: the last near_context_tokens whitespace tokens of t.
inline std::string near_context(const std::string& prefix, const FilterConfig& cfg) {
    return last_word_tail(prefix, cfg.near_context_tokens);
}

inline std::pair<std::string, std::string> nli_premise_hypothesis(
    const PrefixCompletionPair& pair, const std::string& candidate_text,
    const FilterConfig& cfg) {
    std::string t_near = near_context(pair.prefix_text, cfg);
    std::string sep = t_near.empty() ? "" : " ";
    return {t_near + sep + trim(pair.completion_text), t_near + sep + trim(candidate_text)};
}

struct NliFilterResult {
    bool passed = false;
    double p_contradiction = 0.0;
};

inline NliFilterResult nli_filter(ModelGateway& gateway, const EndpointConfig& cfg,
                                  const PrefixCompletionPair& pair,
                                  const CandidateContradiction& candidate,
                                  const FilterConfig& filters) {
    auto [premise, hypothesis] = nli_premise_hypothesis(pair, candidate.text, filters);
    NliProbs probs = gateway.nli_score(cfg, premise, hypothesis);
    return {nli_decision(probs.contradiction, candidate.error_type, filters),
            probs.contradiction};
}

struct FluencyFilterResult {
    bool passed = false;
    double mean_logprob_candidate = 0.0;
    double mean_logprob_original = 0.0;
};

// Both completions scored conditioned on the same prefix; |c| is the
// scorer's completion-token count, not a word count.
inline FluencyFilterResult fluency_filter(ModelGateway& gateway, const EndpointConfig& cfg,
                                          const PrefixCompletionPair& pair,
                                          const CandidateContradiction& candidate,
                                          const FilterConfig& filters,
                                          size_t max_total_tokens = 1024) {
    std::string prefix = pair.prefix_text.empty() ? "" : pair.prefix_text + " ";
    double lp_orig = gateway
                         .conditional_logprobs(cfg, prefix, trim(pair.completion_text),
                                               max_total_tokens)
                         .mean_completion_logprob();
    double lp_cand = gateway
                         .conditional_logprobs(cfg, prefix, trim(candidate.text),
                                               max_total_tokens)
                         .mean_completion_logprob();
    return {lm_decision(lp_cand, lp_orig, filters), lp_cand, lp_orig};
}

// ---------------------------------------------------------------------------
// threshold calibration
// ---------------------------------------------------------------------------

struct LabeledScores {
    std::string candidate_id;
    FilterScores scores;
    bool label_good = false;
    ErrorType error_type = ErrorType::Entity;  // optional in fixture files
};

struct CalibrationResult {
    double threshold = 0.0;
    double precision = 0.0;
    double filter_rate = 0.0;
    bool constraint_satisfied = true;  // false: best unconstrained returned + warning
};

// Grid search for the pass-decision threshold: maximize precision against
// human labels subject to filtering out at most max_filter_rate of the
// samples. Ties resolve to the lower threshold.
inline CalibrationResult calibrate_threshold(const std::vector<LabeledScores>& labeled,
                                             const std::vector<double>& grid,
                                             double max_filter_rate) {
    if (labeled.empty()) throw std::invalid_argument("calibrate_threshold: no labeled data");
    if (grid.empty()) throw std::invalid_argument("calibrate_threshold: empty grid");

    std::vector<double> sorted_grid = grid;
    std::sort(sorted_grid.begin(), sorted_grid.end());

    auto evaluate = [&](double tau) {
        size_t passed = 0, passed_good = 0;
        for (const auto& row : labeled) {
            if (row.scores.p_contradiction > tau) {
                passed++;
                if (row.label_good) passed_good++;
            }
        }
        double precision =
            passed == 0 ? 0.0 : static_cast<double>(passed_good) / static_cast<double>(passed);
        double rate = 1.0 - static_cast<double>(passed) / static_cast<double>(labeled.size());
        return std::pair<double, double>{precision, rate};
    };

    CalibrationResult best_feasible, best_any;
    bool have_feasible = false, have_any = false;
    for (double tau : sorted_grid) {
        auto [precision, rate] = evaluate(tau);
        if (!have_any || precision > best_any.precision) {
            best_any = {tau, precision, rate, false};
            have_any = true;
        }
        if (rate <= max_filter_rate && (!have_feasible || precision > best_feasible.precision)) {
            best_feasible = {tau, precision, rate, true};
            have_feasible = true;
        }
    }
    if (have_feasible) return best_feasible;
    log_warn("calibrate_threshold: no grid threshold satisfies filter-rate <= " +
             std::to_string(max_filter_rate) + "; reporting best unconstrained");
    return best_any;
}

// Fixture rows: {candidate_id, p_contradiction, mean_lp_candidate,
// mean_lp_original, label in {good,bad}[, error_type]}.
inline std::vector<LabeledScores> load_calibration_fixture(const std::filesystem::path& path) {
    std::vector<LabeledScores> rows;
    size_t line_no = 0;
    for (const auto& line : split_lines(read_file(path))) {
        line_no++;
        if (trim(line).empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw std::runtime_error("calibration fixture line " + std::to_string(line_no) +
                                     ": " + e.what());
        }
        LabeledScores row;
        row.candidate_id = j.at("candidate_id").get<std::string>();
        row.scores.p_contradiction = j.at("p_contradiction").get<double>();
        row.scores.mean_logprob_candidate = j.at("mean_lp_candidate").get<double>();
        row.scores.mean_logprob_original = j.at("mean_lp_original").get<double>();
        std::string label = j.at("label").get<std::string>();
        if (label != "good" && label != "bad")
            throw std::runtime_error("calibration fixture line " + std::to_string(line_no) +
                                     ": label must be good|bad");
        row.label_good = label == "good";
        if (j.contains("error_type")) row.error_type = parse_error_type(j.at("error_type"));
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace factor
