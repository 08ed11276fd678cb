#include "recscale/llm/gateway.hpp"

#include "recscale/common/rng.hpp"

#include <cmath>
#include <map>
#include <thread>

namespace recscale::llm {

std::vector<EmbeddingVector> Backend::embed(const std::vector<std::string>&, const std::string& model_id) {
    throw GatewayError(describe() + " does not serve embeddings (model " + model_id + ")");
}

std::chrono::milliseconds RetryPolicy::delay(int retry, double u) const {
    const double base = static_cast<double>(initial_delay.count()) * std::pow(factor, retry - 1);
    const double jittered = base * (1.0 + jitter * u);
    return std::chrono::milliseconds(static_cast<std::int64_t>(std::llround(std::max(0.0, jittered))));
}

class Gateway::Slot {
public:
    explicit Slot(Gateway& g) : g_(g) {
        std::unique_lock lock(g_.slot_mutex_);
        g_.slot_cv_.wait(lock, [&] { return g_.in_flight_ < g_.options_.max_parallel; });
        ++g_.in_flight_;
    }
    ~Slot() {
        {
            std::lock_guard lock(g_.slot_mutex_);
            --g_.in_flight_;
        }
        g_.slot_cv_.notify_one();
    }
    Slot(const Slot&) = delete;
    Slot& operator=(const Slot&) = delete;

private:
    Gateway& g_;
};

Gateway::Gateway(std::shared_ptr<Backend> backend, std::shared_ptr<ResponseCache> cache, GatewayOptions options)
    : backend_(std::move(backend)),
      cache_(cache ? std::move(cache) : std::make_shared<ResponseCache>()),
      options_(std::move(options)),
      jitter_state_(options_.jitter_seed) {
    if (!backend_) throw GatewayError("gateway requires a backend");
    if (options_.max_parallel == 0) options_.max_parallel = 1;
    if (options_.retry.max_attempts < 1) options_.retry.max_attempts = 1;
    if (!options_.sleep) {
        options_.sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
    }
}

template <typename Fn>
auto Gateway::with_retries(Fn&& call) -> decltype(call()) {
    for (int attempt = 1;; ++attempt) {
        try {
            Slot slot(*this);
            remote_calls_.fetch_add(1);
            return call();
        } catch (const TransientError& e) {
            if (attempt >= options_.retry.max_attempts) {
                throw RetriesExhausted(backend_->describe() + ": giving up after " + std::to_string(attempt) +
                                           " attempts: " + e.what(),
                                       attempt);
            }
            double u = 0.0;
            {
                std::lock_guard lock(rng_mutex_);
                SplitMix64 g(jitter_state_);
                u = 2.0 * g.uniform() - 1.0;
                jitter_state_ = g.state();
            }
            retries_.fetch_add(1);
            options_.sleep(options_.retry.delay(attempt, u));
        }
    }
}

ChatResponse Gateway::complete(const ChatRequest& request) {
    validate(request);
    const CacheKey key = cache_key(request);
    if (auto hit = cache_->load(key)) {
        try {
            ChatResponse r = response_from_json(*hit);
            r.cached = true;
            cache_hits_.fetch_add(1);
            return r;
        } catch (const MalformedReply&) {
            // fall through to a fresh call
        }
    }
    cache_misses_.fetch_add(1);
    ChatResponse response = with_retries([&] { return backend_->complete(request); });
    if (response.finish_reason == FinishReason::length) {
        response.usage.completion_tokens = request.max_tokens;
    }
    if (response.finish_reason != FinishReason::error) {
        cache_->store(key, response_to_json(response));
    }
    response.cached = false;
    return response;
}

std::vector<EmbeddingVector> Gateway::embed(const std::vector<std::string>& texts, const std::string& model_id) {
    if (texts.empty()) throw InvalidRequest("embed requires at least one text");
    std::vector<EmbeddingVector> out(texts.size());
    std::vector<bool> filled(texts.size(), false);
    // Distinct uncached texts, in first-seen order.
    std::vector<std::string> pending;
    std::map<std::string, std::vector<std::size_t>> positions;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        if (auto hit = cache_->load(embedding_cache_key(texts[i], model_id))) {
            out[i] = EmbeddingVector{hit->at("embedding").get<std::vector<double>>(), model_id};
            filled[i] = true;
            cache_hits_.fetch_add(1);
            continue;
        }
        auto& slots = positions[texts[i]];
        if (slots.empty()) {
            pending.push_back(texts[i]);
            cache_misses_.fetch_add(1);
        }
        slots.push_back(i);
    }
    if (!pending.empty()) {
        auto fresh = with_retries([&] { return backend_->embed(pending, model_id); });
        if (fresh.size() != pending.size()) {
            throw MalformedReply("embedding backend returned " + std::to_string(fresh.size()) + " vectors for " +
                                 std::to_string(pending.size()) + " texts");
        }
        for (std::size_t j = 0; j < pending.size(); ++j) {
            double norm2 = 0.0;
            for (double v : fresh[j].values) norm2 += v * v;
            if (fresh[j].values.empty() || !(norm2 > 0.0) || !std::isfinite(norm2)) {
                throw MalformedReply("embedding with zero or invalid norm");
            }
            fresh[j].model_id = model_id;
            cache_->store(embedding_cache_key(pending[j], model_id), nlohmann::json{{"embedding", fresh[j].values}});
            for (std::size_t i : positions[pending[j]]) {
                out[i] = fresh[j];
                filled[i] = true;
            }
        }
    }
    const std::size_t dim = out.front().values.size();
    for (const auto& v : out) {
        if (v.values.size() != dim) throw MalformedReply("embedding dimensions differ within one model");
    }
    return out;
}

GatewayStats Gateway::stats() const {
    return GatewayStats{remote_calls_.load(), retries_.load(), cache_hits_.load(), cache_misses_.load()};
}

}  // namespace recscale::llm
