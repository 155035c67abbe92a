#pragma once

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <openssl/evp.h>

namespace factor {

// ---------------------------------------------------------------------------
// strings and whitespace tokens
// ---------------------------------------------------------------------------

inline bool is_ws(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

struct WordSpan {
    size_t begin = 0;
    size_t end = 0;  // exclusive
};

// Maximal non-whitespace runs, with offsets into the original string.
inline std::vector<WordSpan> word_spans(std::string_view text) {
    std::vector<WordSpan> out;
    size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && is_ws(text[i])) i++;
        if (i >= text.size()) break;
        size_t b = i;
        while (i < text.size() && !is_ws(text[i])) i++;
        out.push_back({b, i});
    }
    return out;
}

inline std::vector<std::string> word_tokens(std::string_view text) {
    std::vector<std::string> out;
    for (const auto& s : word_spans(text)) out.emplace_back(text.substr(s.begin, s.end - s.begin));
    return out;
}

inline size_t word_count(std::string_view text) { return word_spans(text).size(); }

inline std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (size_t i = 0; i < parts.size(); i++) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

inline std::string trim(std::string_view s) {
    size_t b = 0, e = s.size();
    while (b < e && is_ws(s[b])) b++;
    while (e > b && is_ws(s[e - 1])) e--;
    return std::string(s.substr(b, e - b));
}

inline std::string rtrim(std::string_view s) {
    size_t e = s.size();
    while (e > 0 && is_ws(s[e - 1])) e--;
    return std::string(s.substr(0, e));
}

inline std::string lowercase(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

inline std::string collapse_ws(std::string_view s) {
    std::string out;
    bool in_ws = false;
    for (char c : s) {
        if (is_ws(c)) {
            in_ws = true;
        } else {
            if (in_ws && !out.empty()) out += ' ';
            in_ws = false;
            out += c;
        }
    }
    return out;
}

// Dedup key for generated completions: lowercase, collapse whitespace,
// strip terminal punctuation.
inline std::string normalize_completion(std::string_view s) {
    std::string out = lowercase(collapse_ws(s));
    while (!out.empty()) {
        char c = out.back();
        if (c == '.' || c == '!' || c == '?' || c == ',' || c == ';' || c == ':') out.pop_back();
        else break;
    }
    return trim(out);
}

inline bool starts_with(std::string_view s, std::string_view prefix) {
    return s.size() >= prefix.size() && s.substr(0, prefix.size()) == prefix;
}

inline std::vector<std::string> split_lines(std::string_view text) {
    std::vector<std::string> lines;
    size_t pos = 0;
    while (pos <= text.size()) {
        size_t nl = text.find('\n', pos);
        if (nl == std::string_view::npos) {
            lines.emplace_back(text.substr(pos));
            break;
        }
        lines.emplace_back(text.substr(pos, nl - pos));
        pos = nl + 1;
    }
    return lines;
}

// Last `n` whitespace tokens of `s`, as a substring (original spacing kept).
inline std::string last_word_tail(std::string_view s, size_t n) {
    auto spans = word_spans(s);
    if (spans.empty() || n == 0) return "";
    size_t first = spans.size() > n ? spans.size() - n : 0;
    return std::string(s.substr(spans[first].begin, spans.back().end - spans[first].begin));
}

// ---------------------------------------------------------------------------
// hashing
// ---------------------------------------------------------------------------

inline std::string sha256_hex(std::string_view data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("sha256 failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; i++) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 0xf];
    }
    return out;
}

inline uint64_t fnv1a64(std::string_view s) {
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

// Uniform double in [0,1) derived from a stable content hash. Used by tests
// and mock endpoints; stable across platforms and runs.
inline double hash_unit(std::string_view s) {
    uint64_t h = fnv1a64(s);
    return static_cast<double>(h >> 11) / static_cast<double>(1ULL << 53);
}

// ---------------------------------------------------------------------------
// seeded rng with platform-stable derived draws
// ---------------------------------------------------------------------------

// std::uniform_int_distribution is implementation-defined, so index draws
// go through modulo reduction to keep outputs identical everywhere.
class SeededRng {
public:
    explicit SeededRng(uint64_t seed) : engine_(seed) {}

    uint64_t next() { return engine_(); }

    size_t index(size_t n) {
        if (n == 0) throw std::invalid_argument("index(0)");
        return static_cast<size_t>(engine_() % n);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; i--) std::swap(v[i - 1], v[index(i)]);
    }

    static uint64_t derive(uint64_t seed, std::string_view key) {
        return seed ^ fnv1a64(key);
    }

private:
    std::mt19937_64 engine_;
};

// ---------------------------------------------------------------------------
// filesystem helpers
// ---------------------------------------------------------------------------

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Write via temp file + rename, so concurrent readers never see partial data.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view data) {
    namespace fs = std::filesystem;
    fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp." + std::to_string(
        std::hash<std::thread::id>{}(std::this_thread::get_id()) & 0xffff);
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write file: " + tmp.string());
        out.write(data.data(), static_cast<std::streamsize>(data.size()));
        if (!out) throw std::runtime_error("short write: " + tmp.string());
    }
    fs::rename(tmp, path);
}

// ---------------------------------------------------------------------------
// logging
// ---------------------------------------------------------------------------

enum class LogLevel { debug = 0, info = 1, warn = 2, error = 3 };

inline LogLevel& log_threshold() {
    static LogLevel level = LogLevel::info;
    return level;
}

inline void set_log_level(std::string_view name) {
    if (name == "debug") log_threshold() = LogLevel::debug;
    else if (name == "info") log_threshold() = LogLevel::info;
    else if (name == "warn") log_threshold() = LogLevel::warn;
    else if (name == "error") log_threshold() = LogLevel::error;
    else throw std::invalid_argument("unknown log level: " + std::string(name));
}

inline void log(LogLevel level, const std::string& msg) {
    if (level < log_threshold()) return;
    static std::mutex mu;
    static const char* names[] = {"DEBUG", "INFO", "WARN", "ERROR"};
    std::lock_guard<std::mutex> lock(mu);
    std::cerr << "[" << names[static_cast<int>(level)] << "] " << msg << "\n";
}

inline void log_info(const std::string& msg) { log(LogLevel::info, msg); }
inline void log_warn(const std::string& msg) { log(LogLevel::warn, msg); }
inline void log_error(const std::string& msg) { log(LogLevel::error, msg); }
inline void log_debug(const std::string& msg) { log(LogLevel::debug, msg); }

// ---------------------------------------------------------------------------
// bounded parallel map
// ---------------------------------------------------------------------------

// Runs fn(i) for i in [0, n) on up to `workers` threads. Exceptions from
// workers are rethrown on the calling thread (first one wins).
inline void parallel_for(size_t n, size_t workers, const std::function<void(size_t)>& fn) {
    if (n == 0) return;
    workers = std::max<size_t>(1, std::min(workers, n));
    if (workers == 1) {
        for (size_t i = 0; i < n; i++) fn(i);
        return;
    }
    std::atomic<size_t> next{0};
    std::mutex err_mu;
    std::exception_ptr err;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (size_t w = 0; w < workers; w++) {
        pool.emplace_back([&] {
            while (true) {
                size_t i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(err_mu);
                    if (!err) err = std::current_exception();
                    next.store(n);
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

}  // namespace factor
