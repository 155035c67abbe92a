#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "factor/common.hpp"

namespace factor {

struct Document {
    std::string doc_id;
    std::string title;
    std::string text;
    std::string source_tag;
};

struct SentenceSpan {
    size_t start = 0;
    size_t end = 0;  // exclusive char offsets into Document.text
    size_t word_count = 0;
    bool is_headline = false;
};

struct PrefixCompletionPair {
    std::string doc_id;
    std::string prefix_text;
    std::string completion_text;
    SentenceSpan completion_span;
};

// ---------------------------------------------------------------------------
// sentence segmentation
// ---------------------------------------------------------------------------

inline const std::set<std::string>& default_abbreviations() {
    static const std::set<std::string> abbrevs = {
        "mr.", "mrs.", "ms.", "dr.", "prof.", "st.", "mt.", "jr.", "sr.", "rev.",
        "hon.", "gen.", "col.", "capt.", "lt.", "sgt.", "maj.", "gov.", "sen.",
        "rep.", "vs.", "etc.", "e.g.", "i.e.", "cf.", "al.", "ca.", "approx.",
        "no.", "nos.", "fig.", "figs.", "vol.", "ed.", "eds.", "inc.", "ltd.",
        "co.", "corp.", "dept.", "univ.", "assn.", "bros.", "ave.", "blvd.",
        "rd.", "jan.", "feb.", "mar.", "apr.", "jun.", "jul.", "aug.", "sep.",
        "sept.", "oct.", "nov.", "dec.", "u.s.", "u.k.", "u.n.", "d.c.", "a.m.",
        "p.m.", "b.c.", "a.d.", "ph.d.", "m.d.", "b.a.", "m.a.", "op.", "pp.",
    };
    return abbrevs;
}

struct SegmenterOptions {
    std::set<std::string> abbreviations = default_abbreviations();
    size_t headline_min_words = 6;
};

inline SegmenterOptions load_segmenter_options(const std::filesystem::path& abbrev_file) {
    SegmenterOptions opts;
    opts.abbreviations.clear();
    for (auto& line : split_lines(read_file(abbrev_file))) {
        std::string entry = lowercase(trim(line));
        if (!entry.empty() && entry[0] != '#') opts.abbreviations.insert(entry);
    }
    return opts;
}

namespace detail {

inline bool is_terminal_punct(char c) { return c == '.' || c == '!' || c == '?'; }

inline bool is_closing_mark(char c) { return c == '"' || c == '\'' || c == ')' || c == ']'; }

inline bool is_opening_quote(char c) { return c == '"' || c == '\''; }

// The word ending at (and including) text[dot], looked up against the
// abbreviation list. Single capitals ("J.") and dotted acronyms ("U.S.")
// also count as abbreviations.
inline bool ends_abbreviation(std::string_view text, size_t dot,
                              const std::set<std::string>& abbrevs) {
    if (text[dot] != '.') return false;
    size_t b = dot;
    while (b > 0 && !is_ws(text[b - 1])) b--;
    std::string word = lowercase(text.substr(b, dot - b + 1));
    if (abbrevs.count(word)) return true;
    if (word.size() == 2 && std::isalpha(static_cast<unsigned char>(word[0]))) return true;
    // Dotted acronyms ("u.s.", "d.c.") not on the list: short letter runs
    // with at least one internal dot. Ellipses fail the internal-dot test.
    bool internal_dot = false;
    size_t run = 0, max_run = 0;
    for (size_t k = 0; k < word.size(); k++) {
        char c = word[k];
        if (c == '.') {
            if (k + 1 < word.size() && std::isalpha(static_cast<unsigned char>(word[k + 1])))
                internal_dot = true;
            run = 0;
        } else if (std::isalpha(static_cast<unsigned char>(c))) {
            run++;
            max_run = std::max(max_run, run);
        } else {
            return false;
        }
    }
    return internal_dot && max_run <= 2;
}

// Sentence boundary test at text[i] (a terminal punct): optional closing
// marks, then whitespace, then an uppercase letter, digit or opening quote.
inline size_t boundary_after(std::string_view text, size_t i,
                             const std::set<std::string>& abbrevs) {
    if (!is_terminal_punct(text[i])) return std::string_view::npos;
    if (ends_abbreviation(text, i, abbrevs)) return std::string_view::npos;
    size_t j = i + 1;
    while (j < text.size() && is_closing_mark(text[j])) j++;
    size_t sentence_end = j;
    if (j >= text.size()) return sentence_end;
    if (!is_ws(text[j])) return std::string_view::npos;
    while (j < text.size() && is_ws(text[j]) && text[j] != '\n') j++;
    if (j >= text.size() || text[j] == '\n') return sentence_end;
    char next = text[j];
    if (std::isupper(static_cast<unsigned char>(next)) ||
        std::isdigit(static_cast<unsigned char>(next)) || is_opening_quote(next))
        return sentence_end;
    return std::string_view::npos;
}

inline SentenceSpan make_span(std::string_view text, size_t begin, size_t end, bool headline) {
    while (begin < end && is_ws(text[begin])) begin++;
    while (end > begin && is_ws(text[end - 1])) end--;
    SentenceSpan span;
    span.start = begin;
    span.end = end;
    span.word_count = word_count(text.substr(begin, end - begin));
    span.is_headline = headline;
    return span;
}

}  // namespace detail

// Rule-based splitter: terminal punctuation followed by whitespace and an
// uppercase/digit/quote start, with an abbreviation exception list. A
// newline-delimited line that lacks terminal punctuation or has fewer than
// `headline_min_words` words is kept whole and flagged as a headline.
inline std::vector<SentenceSpan> segment_sentences(std::string_view text,
                                                   const SegmenterOptions& opts = {}) {
    if (text.empty()) throw std::invalid_argument("segment_sentences: empty text");
    std::vector<SentenceSpan> spans;

    size_t line_start = 0;
    while (line_start <= text.size()) {
        size_t nl = text.find('\n', line_start);
        size_t line_end = (nl == std::string_view::npos) ? text.size() : nl;
        std::string_view line = text.substr(line_start, line_end - line_start);
        std::string stripped = trim(line);
        if (!stripped.empty()) {
            char last = stripped.back();
            size_t k = stripped.size();
            while (k > 0 && detail::is_closing_mark(stripped[k - 1])) k--;
            if (k > 0) last = stripped[k - 1];
            bool headline = !detail::is_terminal_punct(last) ||
                            word_count(stripped) < opts.headline_min_words;
            if (headline) {
                spans.push_back(detail::make_span(text, line_start, line_end, true));
            } else {
                size_t sent_begin = line_start;
                for (size_t i = line_start; i < line_end; i++) {
                    if (!detail::is_terminal_punct(text[i])) continue;
                    size_t sent_end = detail::boundary_after(text, i, opts.abbreviations);
                    if (sent_end == std::string_view::npos || sent_end > line_end) continue;
                    spans.push_back(detail::make_span(text, sent_begin, sent_end, false));
                    sent_begin = sent_end;
                    i = sent_end > 0 ? sent_end - 1 : 0;
                }
                if (trim(std::string(text.substr(sent_begin, line_end - sent_begin))) != "")
                    spans.push_back(detail::make_span(text, sent_begin, line_end, false));
            }
        }
        if (nl == std::string_view::npos) break;
        line_start = nl + 1;
    }
    return spans;
}

inline std::vector<SentenceSpan> segment_sentences(const Document& doc,
                                                   const SegmenterOptions& opts = {}) {
    return segment_sentences(doc.text, opts);
}

// ---------------------------------------------------------------------------
// prefix / completion selection
// ---------------------------------------------------------------------------

struct SelectionOptions {
    SegmenterOptions segmenter;
    size_t min_completion_words = 10;
};

// One sentence per document, uniformly at random (seeded) among sentences
// that are long enough, not headlines, and not document-initial (the prefix
// must be non-empty). Returns nullopt when nothing qualifies.
inline std::optional<PrefixCompletionPair> select_pair(const Document& doc, uint64_t rng_seed,
                                                       const SelectionOptions& opts = {}) {
    auto spans = segment_sentences(doc.text, opts.segmenter);
    std::vector<SentenceSpan> eligible;
    for (const auto& span : spans) {
        if (span.is_headline || span.word_count < opts.min_completion_words) continue;
        if (trim(doc.text.substr(0, span.start)).empty()) continue;
        eligible.push_back(span);
    }
    if (eligible.empty()) return std::nullopt;
    SeededRng rng(SeededRng::derive(rng_seed, doc.doc_id));
    const SentenceSpan& chosen = eligible[rng.index(eligible.size())];
    PrefixCompletionPair pair;
    pair.doc_id = doc.doc_id;
    pair.prefix_text = rtrim(std::string_view(doc.text).substr(0, chosen.start));
    pair.completion_text = doc.text.substr(chosen.start, chosen.end - chosen.start);
    pair.completion_span = chosen;
    return pair;
}

// ---------------------------------------------------------------------------
// corpus loading
// ---------------------------------------------------------------------------

// Accepts either a JSONL file of {doc_id, title, text[, source_tag]} records
// or a directory of UTF-8 .txt files (doc_id taken from the file name).
inline std::vector<Document> load_corpus(const std::filesystem::path& path,
                                         const std::string& default_source_tag = "") {
    namespace fs = std::filesystem;
    std::vector<Document> docs;
    if (fs::is_directory(path)) {
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(path))
            if (entry.is_regular_file() && entry.path().extension() == ".txt")
                files.push_back(entry.path());
        std::sort(files.begin(), files.end());
        for (const auto& file : files) {
            Document doc;
            doc.doc_id = file.stem().string();
            doc.text = read_file(file);
            doc.source_tag = default_source_tag;
            docs.push_back(std::move(doc));
        }
    } else {
        std::string content = read_file(path);
        size_t line_no = 0;
        for (auto& line : split_lines(content)) {
            line_no++;
            if (trim(line).empty()) continue;
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(line);
            } catch (const nlohmann::json::exception& e) {
                throw std::runtime_error("corpus line " + std::to_string(line_no) +
                                         ": bad JSON: " + e.what());
            }
            Document doc;
            doc.doc_id = j.at("doc_id").get<std::string>();
            doc.title = j.value("title", "");
            doc.text = j.at("text").get<std::string>();
            doc.source_tag = j.value("source_tag", default_source_tag);
            docs.push_back(std::move(doc));
        }
    }
    std::set<std::string> seen;
    for (const auto& doc : docs) {
        if (doc.text.empty())
            throw std::runtime_error("corpus: empty text in doc " + doc.doc_id);
        if (!seen.insert(doc.doc_id).second)
            throw std::runtime_error("corpus: duplicate doc_id " + doc.doc_id);
    }
    return docs;
}

inline std::string corpus_hash(const std::vector<Document>& docs) {
    std::string acc;
    for (const auto& doc : docs) {
        acc += sha256_hex(doc.doc_id);
        acc += sha256_hex(doc.text);
    }
    return sha256_hex(acc);
}

}  // namespace factor
