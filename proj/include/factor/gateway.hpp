#pragma once

#include <atomic>
#include <cmath>
#include <condition_variable>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "factor/common.hpp"

namespace factor {

enum class EndpointRole { generator, nli, scorer, eval_model };

inline const char* endpoint_role_name(EndpointRole role) {
    switch (role) {
        case EndpointRole::generator: return "generator";
        case EndpointRole::nli: return "nli";
        case EndpointRole::scorer: return "scorer";
        case EndpointRole::eval_model: return "eval_model";
    }
    throw std::logic_error("bad endpoint role");
}

inline EndpointRole parse_endpoint_role(std::string_view name) {
    for (EndpointRole r : {EndpointRole::generator, EndpointRole::nli, EndpointRole::scorer,
                           EndpointRole::eval_model})
        if (name == endpoint_role_name(r)) return r;
    throw std::invalid_argument("unknown endpoint role: " + std::string(name));
}

struct RetryPolicy {
    int max_attempts = 3;
    int initial_backoff_ms = 100;
    double multiplier = 2.0;
};

struct EndpointConfig {
    EndpointRole role = EndpointRole::eval_model;
    std::string base_url;
    std::string model_name;
    std::string auth_env;       // name of env var holding the bearer token
    int max_parallel = 4;
    double timeout_s = 120.0;
    RetryPolicy retry;
    std::string logprob_base = "e";  // "e" | "10" | "2"; converted to nats
};

struct GenParams {
    double temperature = 0.7;
    int max_tokens = 512;
    int n = 1;
    std::vector<std::string> stop;
};

enum class GatewayErrorKind { config, transport, decode, validation, cap_exceeded };

class GatewayError : public std::runtime_error {
public:
    GatewayError(GatewayErrorKind kind, EndpointRole role, const std::string& msg, int status = 0)
        : std::runtime_error(std::string(endpoint_role_name(role)) + " endpoint: " + msg),
          kind(kind), role(role), http_status(status) {}

    GatewayErrorKind kind;
    EndpointRole role;
    int http_status;
};

struct TokenLogprob {
    std::string text;
    double logprob = 0.0;
    bool has_logprob = false;  // endpoints report no logprob for the first prompt token
    size_t offset = 0;         // char offset into the request prompt
};

struct LogprobResponse {
    std::vector<TokenLogprob> tokens;
    size_t completion_begin = 0;  // token index range covering the completion
    size_t completion_end = 0;

    size_t completion_token_count() const {
        size_t n = 0;
        for (size_t i = completion_begin; i < completion_end; i++)
            if (tokens[i].has_logprob) n++;
        return n;
    }

    double completion_logprob_sum() const {
        double s = 0.0;
        for (size_t i = completion_begin; i < completion_end; i++)
            if (tokens[i].has_logprob) s += tokens[i].logprob;
        return s;
    }

    double mean_completion_logprob() const {
        size_t n = completion_token_count();
        if (n == 0) throw std::runtime_error("no scored completion tokens");
        return completion_logprob_sum() / static_cast<double>(n);
    }

    std::vector<double> completion_logprobs() const {
        std::vector<double> out;
        for (size_t i = completion_begin; i < completion_end; i++)
            if (tokens[i].has_logprob) out.push_back(tokens[i].logprob);
        return out;
    }
};

struct NliProbs {
    double entailment = 0.0;
    double neutral = 0.0;
    double contradiction = 0.0;
};

namespace detail {

class Semaphore {
public:
    explicit Semaphore(int count) : count_(count) {}
    void acquire() {
        std::unique_lock<std::mutex> lock(mu_);
        cv_.wait(lock, [&] { return count_ > 0; });
        count_--;
    }
    void release() {
        {
            std::lock_guard<std::mutex> lock(mu_);
            count_++;
        }
        cv_.notify_one();
    }

private:
    std::mutex mu_;
    std::condition_variable cv_;
    int count_;
};

struct SemaphoreGuard {
    explicit SemaphoreGuard(Semaphore& s) : sem(s) { sem.acquire(); }
    ~SemaphoreGuard() { sem.release(); }
    Semaphore& sem;
};

}  // namespace detail

// HTTP client for the endpoint roles. Responses are cached on disk keyed by
// a content hash of the request (model + canonical body, not the URL), so a
// warm cache replays a run byte-for-byte with zero network calls.
class ModelGateway {
public:
    explicit ModelGateway(std::filesystem::path cache_dir = {})
        : cache_dir_(std::move(cache_dir)) {}

    // -- generation ---------------------------------------------------------

    std::vector<std::string> generate_n(const EndpointConfig& cfg, const std::string& prompt,
                                        const GenParams& params) {
        nlohmann::json body = {
            {"model", cfg.model_name}, {"prompt", prompt},
            {"max_tokens", params.max_tokens}, {"temperature", params.temperature},
            {"n", params.n},
        };
        if (!params.stop.empty()) body["stop"] = params.stop;
        nlohmann::json resp = post_json(cfg, "/v1/completions", body, "completions");
        std::vector<std::string> out;
        try {
            for (const auto& choice : resp.at("choices"))
                out.push_back(choice.at("text").get<std::string>());
        } catch (const nlohmann::json::exception& e) {
            throw GatewayError(GatewayErrorKind::decode, cfg.role,
                               std::string("bad completions payload: ") + e.what());
        }
        if (out.size() != static_cast<size_t>(params.n))
            throw GatewayError(GatewayErrorKind::validation, cfg.role,
                               "expected " + std::to_string(params.n) + " choices, got " +
                                   std::to_string(out.size()));
        return out;
    }

    std::string generate(const EndpointConfig& cfg, const std::string& prompt,
                         const GenParams& params) {
        GenParams one = params;
        one.n = 1;
        return generate_n(cfg, prompt, one).front();
    }

    // -- conditional log-probabilities --------------------------------------

    // Scores `completion` conditioned on `prefix` (concatenated verbatim;
    // the caller controls spacing). When prefix+completion exceeds
    // max_total_tokens, the prefix is cut from the left, in whitespace
    // tokens, so the completion is always fully scored. Completion tokens
    // are identified by character-offset alignment against the returned
    // token texts: every endpoint token overlapping the completion's char
    // span is included.
    LogprobResponse conditional_logprobs(const EndpointConfig& cfg, const std::string& prefix,
                                         const std::string& completion,
                                         size_t max_total_tokens = 1024) {
        if (completion.empty())
            throw std::invalid_argument("conditional_logprobs: empty completion");
        size_t completion_tokens = word_count(completion);
        if (completion_tokens > max_total_tokens)
            throw GatewayError(GatewayErrorKind::cap_exceeded, cfg.role,
                               "completion alone exceeds the token cap (" +
                                   std::to_string(completion_tokens) + " > " +
                                   std::to_string(max_total_tokens) + ")");
        std::string kept_prefix = prefix;
        auto prefix_spans = word_spans(prefix);
        size_t budget = max_total_tokens - completion_tokens;
        if (prefix_spans.size() > budget) {
            size_t first_kept = prefix_spans.size() - budget;
            kept_prefix = budget == 0 ? "" : prefix.substr(prefix_spans[first_kept].begin);
        }
        std::string prompt = kept_prefix + completion;

        nlohmann::json body = {
            {"model", cfg.model_name}, {"prompt", prompt}, {"max_tokens", 0},
            {"temperature", 0.0},      {"echo", true},     {"logprobs", 0},
        };
        nlohmann::json resp = post_json(cfg, "/v1/completions", body, "completions");
        LogprobResponse out = parse_logprobs(cfg, resp, prompt);

        size_t comp_begin_char = prompt.size() - completion.size();
        size_t first = out.tokens.size(), last = 0;
        for (size_t i = 0; i < out.tokens.size(); i++) {
            size_t tb = out.tokens[i].offset;
            size_t te = tb + out.tokens[i].text.size();
            if (te > comp_begin_char && tb < prompt.size()) {
                first = std::min(first, i);
                last = i + 1;
            }
        }
        if (first >= last)
            throw GatewayError(GatewayErrorKind::validation, cfg.role,
                               "no tokens aligned with the completion span");
        out.completion_begin = first;
        out.completion_end = last;
        return out;
    }

    // -- NLI ----------------------------------------------------------------

    NliProbs nli_score(const EndpointConfig& cfg, const std::string& premise,
                       const std::string& hypothesis) {
        nlohmann::json body = {
            {"model", cfg.model_name}, {"premise", premise}, {"hypothesis", hypothesis}};
        nlohmann::json resp = post_json(cfg, "/v1/nli", body, "nli");
        NliProbs probs;
        try {
            const auto& p = resp.at("probs");
            probs.entailment = p.at("entailment").get<double>();
            probs.neutral = p.at("neutral").get<double>();
            probs.contradiction = p.at("contradiction").get<double>();
        } catch (const nlohmann::json::exception& e) {
            throw GatewayError(GatewayErrorKind::decode, cfg.role,
                               std::string("bad nli payload: ") + e.what());
        }
        double sum = probs.entailment + probs.neutral + probs.contradiction;
        for (double v : {probs.entailment, probs.neutral, probs.contradiction})
            if (!(v >= 0.0 && v <= 1.0))
                throw GatewayError(GatewayErrorKind::validation, cfg.role,
                                   "nli probability out of [0,1]");
        if (std::abs(sum - 1.0) > 1e-6)
            throw GatewayError(GatewayErrorKind::validation, cfg.role,
                               "nli probabilities sum to " + std::to_string(sum));
        return probs;
    }

    // -- stats ---------------------------------------------------------------

    size_t network_calls() const { return network_calls_.load(); }
    size_t cache_hits() const { return cache_hits_.load(); }
    void reset_stats() {
        network_calls_ = 0;
        cache_hits_ = 0;
    }

    const std::filesystem::path& cache_dir() const { return cache_dir_; }

private:
    nlohmann::json post_json(const EndpointConfig& cfg, const std::string& path,
                             const nlohmann::json& body, const std::string& kind) {
        if (cfg.base_url.empty())
            throw GatewayError(GatewayErrorKind::config, cfg.role, "no base_url configured");
        std::string body_str = body.dump();
        std::string cache_key =
            sha256_hex(kind + "\x1f" + cfg.model_name + "\x1f" + body_str);

        if (!cache_dir_.empty()) {
            auto cached = cache_lookup(cache_key);
            if (cached) {
                cache_hits_++;
                return decode_body(cfg, *cached);
            }
        }

        detail::SemaphoreGuard guard(semaphore_for(cfg));
        const RetryPolicy& retry = cfg.retry;
        double backoff = retry.initial_backoff_ms;
        std::string last_error;
        for (int attempt = 1; attempt <= std::max(1, retry.max_attempts); attempt++) {
            httplib::Client client(cfg.base_url);
            client.set_connection_timeout(static_cast<time_t>(cfg.timeout_s), 0);
            client.set_read_timeout(static_cast<time_t>(cfg.timeout_s), 0);
            client.set_write_timeout(static_cast<time_t>(cfg.timeout_s), 0);
            httplib::Headers headers;
            if (!cfg.auth_env.empty()) {
                if (const char* token = std::getenv(cfg.auth_env.c_str()))
                    headers.emplace("Authorization", std::string("Bearer ") + token);
            }
            network_calls_++;
            auto res = client.Post(path, headers, body_str, "application/json");
            if (!res) {
                last_error = "connection failed (" + httplib::to_string(res.error()) + ")";
            } else if (res->status >= 500) {
                last_error = "server error " + std::to_string(res->status);
            } else if (res->status != 200) {
                throw GatewayError(GatewayErrorKind::transport, cfg.role,
                                   "http status " + std::to_string(res->status), res->status);
            } else {
                nlohmann::json parsed = decode_body(cfg, res->body);
                if (!cache_dir_.empty()) cache_store(cache_key, res->body);
                return parsed;
            }
            if (attempt < retry.max_attempts) {
                std::this_thread::sleep_for(
                    std::chrono::milliseconds(static_cast<int>(backoff)));
                backoff *= retry.multiplier;
            }
        }
        throw GatewayError(GatewayErrorKind::transport, cfg.role,
                           last_error + " after " + std::to_string(retry.max_attempts) +
                               " attempts");
    }

    nlohmann::json decode_body(const EndpointConfig& cfg, const std::string& body) {
        try {
            return nlohmann::json::parse(body);
        } catch (const nlohmann::json::exception& e) {
            throw GatewayError(GatewayErrorKind::decode, cfg.role,
                               std::string("malformed JSON body: ") + e.what());
        }
    }

    LogprobResponse parse_logprobs(const EndpointConfig& cfg, const nlohmann::json& resp,
                                   const std::string& prompt) {
        LogprobResponse out;
        try {
            const auto& lp = resp.at("choices").at(0).at("logprobs");
            const auto& tokens = lp.at("tokens");
            const auto& logprobs = lp.at("token_logprobs");
            if (tokens.size() != logprobs.size())
                throw GatewayError(GatewayErrorKind::validation, cfg.role,
                                   "tokens / token_logprobs length mismatch");
            const nlohmann::json* offsets = nullptr;
            if (lp.contains("text_offset")) offsets = &lp.at("text_offset");
            size_t cum = 0;
            for (size_t i = 0; i < tokens.size(); i++) {
                TokenLogprob tok;
                tok.text = tokens[i].get<std::string>();
                tok.offset = offsets ? (*offsets)[i].get<size_t>() : cum;
                cum = tok.offset + tok.text.size();
                if (!logprobs[i].is_null()) {
                    double v = logprobs[i].get<double>();
                    v = to_nats(cfg, v);
                    if (!std::isfinite(v) || v > 0.0)
                        throw GatewayError(GatewayErrorKind::validation, cfg.role,
                                           "logprob not a finite non-positive value: " +
                                               std::to_string(v));
                    tok.logprob = v;
                    tok.has_logprob = true;
                }
                out.tokens.push_back(std::move(tok));
            }
        } catch (const nlohmann::json::exception& e) {
            throw GatewayError(GatewayErrorKind::decode, cfg.role,
                               std::string("bad logprobs payload: ") + e.what());
        }
        if (!out.tokens.empty()) {
            const auto& last = out.tokens.back();
            if (last.offset + last.text.size() > prompt.size())
                throw GatewayError(GatewayErrorKind::validation, cfg.role,
                                   "token offsets overrun the prompt");
        }
        return out;
    }

    static double to_nats(const EndpointConfig& cfg, double v) {
        if (cfg.logprob_base == "e") return v;
        if (cfg.logprob_base == "10") return v * std::log(10.0);
        if (cfg.logprob_base == "2") return v * std::log(2.0);
        throw GatewayError(GatewayErrorKind::config, cfg.role,
                           "unknown logprob base: " + cfg.logprob_base);
    }

    std::optional<std::string> cache_lookup(const std::string& key) {
        std::filesystem::path file = cache_path(key);
        if (!std::filesystem::exists(file)) return std::nullopt;
        return read_file(file);
    }

    void cache_store(const std::string& key, const std::string& body) {
        write_file_atomic(cache_path(key), body);
    }

    std::filesystem::path cache_path(const std::string& key) const {
        return cache_dir_ / key.substr(0, 2) / (key + ".json");
    }

    detail::Semaphore& semaphore_for(const EndpointConfig& cfg) {
        std::lock_guard<std::mutex> lock(sem_mu_);
        std::string key = cfg.base_url + "|" + endpoint_role_name(cfg.role);
        auto it = semaphores_.find(key);
        if (it == semaphores_.end())
            it = semaphores_
                     .emplace(key, std::make_unique<detail::Semaphore>(
                                       std::max(1, cfg.max_parallel)))
                     .first;
        return *it->second;
    }

    std::filesystem::path cache_dir_;
    std::atomic<size_t> network_calls_{0};
    std::atomic<size_t> cache_hits_{0};
    std::mutex sem_mu_;
    std::map<std::string, std::unique_ptr<detail::Semaphore>> semaphores_;
};

}  // namespace factor
