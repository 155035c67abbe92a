#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "factor/common.hpp"
#include "factor/corpus.hpp"
#include "factor/error_typing.hpp"
#include "factor/gateway.hpp"

namespace factor {

struct PromptTemplate {
    ErrorType error_type = ErrorType::Entity;
    std::string template_text;   // full prompt with {context} / {completion}
    std::string few_shot_block;  // the demonstration section between ## markers
};

class PromptConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline size_t count_occurrences(std::string_view haystack, std::string_view needle) {
    size_t n = 0, pos = 0;
    while ((pos = haystack.find(needle, pos)) != std::string_view::npos) {
        n++;
        pos += needle.size();
    }
    return n;
}

}  // namespace detail

inline PromptTemplate validate_prompt_template(ErrorType type, std::string text) {
    size_t completions = detail::count_occurrences(text, "{completion}");
    size_t contexts = detail::count_occurrences(text, "{context}");
    if (completions != 1)
        throw PromptConfigError(std::string(error_type_name(type)) +
                                " template: {completion} must appear exactly once");
    if (type == ErrorType::Link) {
        if (contexts != 0)
            throw PromptConfigError("link template must not contain {context}");
        if (text.find("NA") == std::string::npos)
            throw PromptConfigError("link template must contain the NA fallback token");
    } else if (contexts != 1) {
        throw PromptConfigError(std::string(error_type_name(type)) +
                                " template: {context} must appear exactly once");
    }
    PromptTemplate tmpl;
    tmpl.error_type = type;
    size_t first = text.find("\n##");
    size_t last = text.rfind("\n##");
    if (first != std::string::npos && last != std::string::npos && last > first)
        tmpl.few_shot_block = text.substr(first + 1, last - first);
    tmpl.template_text = std::move(text);
    return tmpl;
}

using PromptLibrary = std::map<ErrorType, PromptTemplate>;

// Loads prompts/<error_type>.txt for all five types.
inline PromptLibrary load_prompt_library(const std::filesystem::path& dir) {
    PromptLibrary lib;
    for (ErrorType type : kAllErrorTypes) {
        std::filesystem::path file = dir / (std::string(error_type_name(type)) + ".txt");
        if (!std::filesystem::exists(file))
            throw PromptConfigError("missing prompt file: " + file.string());
        lib.emplace(type, validate_prompt_template(type, read_file(file)));
    }
    return lib;
}

// The last `context_window` characters of the prefix, opened at a sentence
// boundary when one falls inside the window.
inline std::string context_tail(const std::string& prefix, size_t context_window,
                                const SegmenterOptions& seg = {}) {
    if (context_window == 0 || prefix.empty()) return "";
    if (prefix.size() <= context_window) return trim(prefix);
    size_t cutoff = prefix.size() - context_window;
    auto spans = segment_sentences(prefix, seg);
    for (const auto& span : spans)
        if (span.start >= cutoff) return trim(prefix.substr(span.start));
    // no boundary inside the window: cut at the first word start past cutoff
    for (const auto& w : word_spans(prefix))
        if (w.begin >= cutoff) return trim(prefix.substr(w.begin));
    return "";
}

inline std::string render_prompt(const PromptTemplate& tmpl, const PrefixCompletionPair& pair,
                                 size_t context_window, const SegmenterOptions& seg = {}) {
    std::string out = tmpl.template_text;
    auto replace_once = [&](std::string_view placeholder, const std::string& value) {
        size_t pos = out.find(placeholder);
        if (pos == std::string::npos)
            throw PromptConfigError("placeholder missing at render time: " +
                                    std::string(placeholder));
        out.replace(pos, placeholder.size(), value);
    };
    if (tmpl.error_type != ErrorType::Link)
        replace_once("{context}", context_tail(pair.prefix_text, context_window, seg));
    replace_once("{completion}", trim(pair.completion_text));
    return out;
}

// ---------------------------------------------------------------------------
// output parsing
// ---------------------------------------------------------------------------

struct CandidateContradiction {
    ErrorType error_type = ErrorType::Entity;
    std::string planned_edits;  // the "Change:" line(s), joined
    std::string text;           // the full modified completion
    int generation_index = 0;   // position in the numbered list, 1-based
    std::string source_example_id;
};

struct ParsedGeneration {
    std::vector<CandidateContradiction> candidates;
    size_t items_seen = 0;
    size_t items_malformed = 0;  // numbered items with no Contradiction: line
};

namespace detail {

// "3. ..." or "3) ..." at the start of a line; returns the item number.
inline std::optional<int> item_number(const std::string& line, std::string& rest) {
    size_t i = 0;
    while (i < line.size() && is_ws(line[i])) i++;
    size_t d = i;
    while (d < line.size() && std::isdigit(static_cast<unsigned char>(line[d]))) d++;
    if (d == i || d >= line.size()) return std::nullopt;
    if (line[d] != '.' && line[d] != ')') return std::nullopt;
    rest = trim(line.substr(d + 1));
    return std::stoi(line.substr(i, d - i));
}

}  // namespace detail

// Parses the numbered edit-plan output format:
//   1. Change: "X" to "Y".
//   Contradiction: <full modified completion>
// Coreference items may carry extra "Pronoun:" lines. A raw output of "NA"
// means no contradiction could be produced and yields an empty list.
inline ParsedGeneration parse_generation(const std::string& raw, ErrorType error_type) {
    ParsedGeneration out;
    std::string trimmed = trim(raw);
    if (trimmed == "NA" || trimmed == "\"NA\"") return out;

    struct Item {
        int number = 0;
        std::vector<std::string> lines;
    };
    std::vector<Item> items;
    for (const auto& line : split_lines(trimmed)) {
        std::string rest;
        if (auto num = detail::item_number(line, rest)) {
            items.push_back({*num, {}});
            if (!rest.empty()) items.back().lines.push_back(rest);
        } else if (!items.empty()) {
            items.back().lines.push_back(trim(line));
        }
    }

    for (const auto& item : items) {
        out.items_seen++;
        std::vector<std::string> edits;
        std::string contradiction;
        bool in_contradiction = false;
        for (const auto& line : item.lines) {
            if (starts_with(line, "Contradiction:")) {
                contradiction = trim(line.substr(std::string("Contradiction:").size()));
                in_contradiction = true;
            } else if (starts_with(line, "Change:") || starts_with(line, "Changes:") ||
                       starts_with(line, "Additional changes:")) {
                edits.push_back(line);
                in_contradiction = false;
            } else if (starts_with(line, "Pronoun:")) {
                in_contradiction = false;
            } else if (in_contradiction && !line.empty()) {
                contradiction += " " + line;
            }
        }
        if (contradiction.empty()) {
            out.items_malformed++;
            continue;
        }
        CandidateContradiction cand;
        cand.error_type = error_type;
        cand.planned_edits = join(edits, " ");
        cand.text = collapse_ws(contradiction);
        cand.generation_index = item.number;
        out.candidates.push_back(std::move(cand));
    }
    return out;
}

// ---------------------------------------------------------------------------
// candidate generation
// ---------------------------------------------------------------------------

struct GenerationOptions {
    size_t context_window = 1500;  // chars of prefix tail shown to the generator
    GenParams params;              // temperature 0.7, 512 tokens, 1 sample per type
    SegmenterOptions segmenter;
};

struct RawGenerationRecord {
    std::string example_id;
    ErrorType error_type = ErrorType::Entity;
    std::string raw;
    size_t parsed_count = 0;
    size_t malformed_count = 0;
};

struct GenerationOutcome {
    std::vector<CandidateContradiction> candidates;
    std::vector<RawGenerationRecord> raw_records;
    std::vector<ErrorType> failed_types;  // endpoint failures, not parse failures
    size_t items_seen = 0;
    size_t items_malformed = 0;
};

// One endpoint call per eligible error type; each call yields multiple
// numbered contradictions. Exact duplicates of the true completion are
// dropped, and candidates are deduplicated on normalized text across types.
inline GenerationOutcome generate_candidates(ModelGateway& gateway, const EndpointConfig& cfg,
                                             const PromptLibrary& library,
                                             const PrefixCompletionPair& pair,
                                             const EligibilityReport& report,
                                             const std::string& example_id,
                                             const GenerationOptions& opts = {}) {
    auto types = report.eligible_types();
    if (types.empty())
        throw std::invalid_argument("generate_candidates: no eligible error types");

    GenerationOutcome out;
    std::set<std::string> seen_texts;
    seen_texts.insert(normalize_completion(pair.completion_text));

    for (ErrorType type : types) {
        const PromptTemplate& tmpl = library.at(type);
        std::string prompt = render_prompt(tmpl, pair, opts.context_window, opts.segmenter);
        std::string raw;
        try {
            raw = gateway.generate(cfg, prompt, opts.params);
        } catch (const GatewayError& e) {
            log_warn("generation failed for example " + example_id + " type " +
                     error_type_name(type) + ": " + e.what());
            out.failed_types.push_back(type);
            continue;
        }
        ParsedGeneration parsed = parse_generation(raw, type);
        out.items_seen += parsed.items_seen;
        out.items_malformed += parsed.items_malformed;
        out.raw_records.push_back(
            {example_id, type, raw, parsed.candidates.size(), parsed.items_malformed});
        for (auto& cand : parsed.candidates) {
            if (cand.text == pair.completion_text) continue;
            std::string key = normalize_completion(cand.text);
            if (key.empty() || !seen_texts.insert(key).second) continue;
            cand.source_example_id = example_id;
            out.candidates.push_back(std::move(cand));
        }
    }
    return out;
}

}  // namespace factor
