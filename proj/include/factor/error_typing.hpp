#pragma once

#include <array>
#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "factor/common.hpp"

namespace factor {

enum class ErrorType { Predicate = 0, Entity, Circumstance, Coreference, Link };

inline constexpr std::array<ErrorType, 5> kAllErrorTypes = {
    ErrorType::Predicate, ErrorType::Entity, ErrorType::Circumstance,
    ErrorType::Coreference, ErrorType::Link};

inline const char* error_type_name(ErrorType t) {
    switch (t) {
        case ErrorType::Predicate: return "predicate";
        case ErrorType::Entity: return "entity";
        case ErrorType::Circumstance: return "circumstance";
        case ErrorType::Coreference: return "coreference";
        case ErrorType::Link: return "link";
    }
    throw std::logic_error("bad error type");
}

inline ErrorType parse_error_type(std::string_view name) {
    for (ErrorType t : kAllErrorTypes)
        if (name == error_type_name(t)) return t;
    throw std::invalid_argument("unknown error type: " + std::string(name));
}

struct Evidence {
    std::string text;
    size_t offset = 0;  // char offset into the classified sentence
};

struct EligibilityReport {
    std::array<std::vector<Evidence>, 5> evidence;

    bool eligible(ErrorType t) const { return !evidence[static_cast<size_t>(t)].empty(); }
    const std::vector<Evidence>& evidence_for(ErrorType t) const {
        return evidence[static_cast<size_t>(t)];
    }
    std::vector<ErrorType> eligible_types() const {
        std::vector<ErrorType> out;
        for (ErrorType t : kAllErrorTypes)
            if (eligible(t)) out.push_back(t);
        return out;
    }
};

// ---------------------------------------------------------------------------
// lexicons
// ---------------------------------------------------------------------------

struct Lexicons {
    std::set<std::string> pronouns;
    std::set<std::string> link_words;  // may contain two-word phrases
    std::set<std::string> auxiliaries;
    std::set<std::string> irregular_verbs;
    std::set<std::string> verb_stems;
    std::set<std::string> months;
    std::set<std::string> weekdays;
    std::set<std::string> determiners;
    std::vector<std::string> noun_suffixes;
};

inline const Lexicons& default_lexicons() {
    static const Lexicons lex = [] {
        Lexicons l;
        l.pronouns = {"he", "him", "his", "himself", "she", "her", "hers", "herself",
                      "it", "its", "itself", "they", "them", "their", "theirs",
                      "themselves", "we", "us", "our", "ours", "ourselves", "i", "me",
                      "my", "mine", "myself", "you", "your", "yours", "yourself"};
        l.link_words = {"before", "after", "prior to", "since", "because", "caused",
                        "resulting", "therefore", "until", "while", "subsequently",
                        "consequently", "led to"};
        l.auxiliaries = {"am", "is", "are", "was", "were", "be", "been", "being",
                         "has", "have", "had", "having", "do", "does", "did", "done",
                         "will", "would", "shall", "should", "can", "could", "may",
                         "might", "must", "ought"};
        l.irregular_verbs = {"became", "become", "began", "begun", "broke", "brought",
                             "built", "bought", "came", "chose", "drew", "drove",
                             "fell", "felt", "fought", "found", "gave", "got", "grew",
                             "held", "kept", "knew", "led", "left", "lost", "made",
                             "met", "paid", "ran", "rose", "said", "sat", "saw",
                             "sent", "set", "sold", "spent", "spoke", "stood",
                             "taught", "thought", "threw", "told", "took", "went",
                             "won", "wore", "wrote"};
        l.verb_stems = {"appear", "call", "close", "continue", "create", "describe",
                        "develop", "direct", "earn", "enter", "establish", "follow",
                        "form", "include", "join", "lead", "live", "move", "open",
                        "perform", "play", "produce", "receive", "record", "release",
                        "remain", "represent", "return", "serve", "sign", "star",
                        "start", "support", "work", "write"};
        l.months = {"january", "february", "march", "april", "may", "june", "july",
                    "august", "september", "october", "november", "december", "jan",
                    "feb", "mar", "apr", "jun", "jul", "aug", "sep", "sept", "oct",
                    "nov", "dec"};
        l.weekdays = {"monday", "tuesday", "wednesday", "thursday", "friday",
                      "saturday", "sunday"};
        l.determiners = {"the", "a", "an", "this", "that", "these", "those"};
        l.noun_suffixes = {"tion", "sion", "ment", "ness", "ity", "ance", "ence",
                           "ship", "hood", "dom", "ism", "ist"};
        return l;
    }();
    return lex;
}

inline std::set<std::string> load_word_list(const std::filesystem::path& file) {
    std::set<std::string> out;
    for (auto& line : split_lines(read_file(file))) {
        std::string entry = lowercase(trim(line));
        if (!entry.empty() && entry[0] != '#') out.insert(entry);
    }
    return out;
}

// Overlays word-list files from a directory onto the defaults. Recognized
// file names: pronouns.txt, link_words.txt, auxiliaries.txt,
// irregular_verbs.txt, verb_stems.txt, months.txt, weekdays.txt.
inline Lexicons load_lexicons(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    Lexicons lex = default_lexicons();
    auto overlay = [&](const char* name, std::set<std::string>& target) {
        fs::path file = dir / name;
        if (fs::exists(file)) target = load_word_list(file);
    };
    overlay("pronouns.txt", lex.pronouns);
    overlay("link_words.txt", lex.link_words);
    overlay("auxiliaries.txt", lex.auxiliaries);
    overlay("irregular_verbs.txt", lex.irregular_verbs);
    overlay("verb_stems.txt", lex.verb_stems);
    overlay("months.txt", lex.months);
    overlay("weekdays.txt", lex.weekdays);
    return lex;
}

// ---------------------------------------------------------------------------
// eligibility classification
// ---------------------------------------------------------------------------

namespace detail {

struct CoreToken {
    std::string text;   // token with surrounding punctuation stripped
    std::string lower;
    size_t offset = 0;  // offset of `text` in the sentence
};

inline std::vector<CoreToken> core_tokens(std::string_view sentence) {
    std::vector<CoreToken> out;
    for (const auto& span : word_spans(sentence)) {
        size_t b = span.begin, e = span.end;
        while (b < e && !std::isalnum(static_cast<unsigned char>(sentence[b]))) b++;
        while (e > b && !std::isalnum(static_cast<unsigned char>(sentence[e - 1]))) e--;
        if (b >= e) continue;
        CoreToken tok;
        tok.text = std::string(sentence.substr(b, e - b));
        tok.lower = lowercase(tok.text);
        tok.offset = b;
        out.push_back(std::move(tok));
    }
    return out;
}

inline bool is_capitalized(const std::string& s) {
    return !s.empty() && std::isupper(static_cast<unsigned char>(s[0]));
}

inline bool all_lower_alpha(const std::string& s) {
    for (char c : s)
        if (!std::islower(static_cast<unsigned char>(c))) return false;
    return !s.empty();
}

inline bool year_in_range(const std::string& digits) {
    if (digits.size() != 4) return false;
    int v = std::stoi(digits);
    return v >= 1000 && v <= 2999;
}

}  // namespace detail

// Deterministic part-of-speech approximation: no statistical tagger, just
// capitalization, closed word lists and suffix rules. Over-flagging is fine;
// an eligible type only enables a generation prompt, and bad candidates are
// rejected by the downstream filters.
inline EligibilityReport classify_eligibility(std::string_view sentence,
                                              const Lexicons& lex = default_lexicons()) {
    if (trim(sentence).empty())
        throw std::invalid_argument("classify_eligibility: empty sentence");

    EligibilityReport report;
    auto add = [&](ErrorType t, const std::string& text, size_t offset) {
        report.evidence[static_cast<size_t>(t)].push_back({text, offset});
    };

    auto tokens = detail::core_tokens(sentence);

    for (size_t i = 0; i < tokens.size(); i++) {
        const auto& tok = tokens[i];

        if (lex.pronouns.count(tok.lower))
            add(ErrorType::Coreference, tok.text, tok.offset);

        // link words, including two-word phrases
        if (lex.link_words.count(tok.lower)) {
            add(ErrorType::Link, tok.text, tok.offset);
        } else if (i + 1 < tokens.size()) {
            std::string bigram = tok.lower + " " + tokens[i + 1].lower;
            if (lex.link_words.count(bigram)) {
                size_t end = tokens[i + 1].offset + tokens[i + 1].text.size();
                add(ErrorType::Link, std::string(sentence.substr(tok.offset, end - tok.offset)),
                    tok.offset);
            }
        }

        // verb-like: auxiliaries, irregulars, known stems (+s/es/ed/ing), or
        // a lowercase -ed/-ing suffix
        bool verb = lex.auxiliaries.count(tok.lower) || lex.irregular_verbs.count(tok.lower);
        if (!verb && lex.verb_stems.count(tok.lower)) verb = true;
        if (!verb) {
            for (const char* suf : {"s", "es", "ed", "ing"}) {
                std::string suffix(suf);
                if (tok.lower.size() > suffix.size() &&
                    tok.lower.ends_with(suffix) &&
                    lex.verb_stems.count(tok.lower.substr(0, tok.lower.size() - suffix.size()))) {
                    verb = true;
                    break;
                }
            }
        }
        if (!verb && detail::all_lower_alpha(tok.lower) && tok.lower.size() >= 5 &&
            (tok.lower.ends_with("ed") || tok.lower.ends_with("ing")))
            verb = true;
        if (verb) add(ErrorType::Predicate, tok.text, tok.offset);

        // noun-like: capitalized mid-sentence (not a pronoun), after a
        // determiner, or a common-noun suffix
        bool noun = false;
        if (i > 0 && detail::is_capitalized(tok.text) && !lex.pronouns.count(tok.lower))
            noun = true;
        if (!noun && i > 0 && lex.determiners.count(tokens[i - 1].lower) &&
            !lex.pronouns.count(tok.lower))
            noun = true;
        if (!noun) {
            for (const auto& suf : lex.noun_suffixes) {
                if (tok.lower.size() > suf.size() + 2 && tok.lower.ends_with(suf)) {
                    noun = true;
                    break;
                }
            }
        }
        if (noun) add(ErrorType::Entity, tok.text, tok.offset);

        // circumstance: months/weekdays (capitalized), "in/at <Capitalized>"
        if (detail::is_capitalized(tok.text) &&
            (lex.months.count(tok.lower) || lex.weekdays.count(tok.lower)))
            add(ErrorType::Circumstance, tok.text, tok.offset);
        if ((tok.lower == "in" || tok.lower == "at") && i + 1 < tokens.size() &&
            detail::is_capitalized(tokens[i + 1].text) &&
            !lex.pronouns.count(tokens[i + 1].lower) &&
            !detail::year_in_range(tokens[i + 1].text))
            add(ErrorType::Circumstance, tokens[i + 1].text, tokens[i + 1].offset);
    }

    // years and clock times, scanned over the raw sentence
    for (size_t i = 0; i < sentence.size(); i++) {
        if (!std::isdigit(static_cast<unsigned char>(sentence[i]))) continue;
        size_t j = i;
        while (j < sentence.size() && std::isdigit(static_cast<unsigned char>(sentence[j]))) j++;
        size_t len = j - i;
        bool bounded = (i == 0 || !std::isdigit(static_cast<unsigned char>(sentence[i - 1])));
        if (bounded && len == 4) {
            std::string digits(sentence.substr(i, 4));
            if (detail::year_in_range(digits)) add(ErrorType::Circumstance, digits, i);
        }
        if (bounded && (len == 1 || len == 2) && j < sentence.size() && sentence[j] == ':' &&
            j + 2 < sentence.size() + 1) {
            size_t k = j + 1;
            size_t mins = 0;
            while (k < sentence.size() && std::isdigit(static_cast<unsigned char>(sentence[k]))) {
                k++;
                mins++;
            }
            if (mins == 2)
                add(ErrorType::Circumstance, std::string(sentence.substr(i, k - i)), i);
        }
        i = j;
    }

    return report;
}

}  // namespace factor
