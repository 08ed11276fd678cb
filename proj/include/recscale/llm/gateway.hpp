#pragma once

#include "recscale/llm/backend.hpp"
#include "recscale/llm/response_cache.hpp"

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>

namespace recscale::llm {

struct RetryPolicy {
    std::chrono::milliseconds initial_delay{1000};
    double factor = 2.0;
    double jitter = 0.2;  // +-20%
    int max_attempts = 5;

    // Delay before retry number `retry` (1-based), given u in [-1, 1).
    std::chrono::milliseconds delay(int retry, double u) const;
};

struct GatewayOptions {
    RetryPolicy retry;
    std::size_t max_parallel = 4;
    std::uint64_t jitter_seed = 0;
    // Injectable for tests; defaults to std::this_thread::sleep_for.
    std::function<void(std::chrono::milliseconds)> sleep;
};

struct GatewayStats {
    std::uint64_t remote_calls = 0;
    std::uint64_t retries = 0;
    std::uint64_t cache_hits = 0;
    std::uint64_t cache_misses = 0;
};

// Bounded-parallelism, caching, retrying front for one Backend. Shareable
// across threads.
class Gateway {
public:
    Gateway(std::shared_ptr<Backend> backend, std::shared_ptr<ResponseCache> cache, GatewayOptions options = {});

    ChatResponse complete(const ChatRequest& request);

    // One vector per text, in input order. Each text is cached separately.
    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts, const std::string& model_id);

    GatewayStats stats() const;
    const Backend& backend() const { return *backend_; }

private:
    template <typename Fn>
    auto with_retries(Fn&& call) -> decltype(call());

    class Slot;

    std::shared_ptr<Backend> backend_;
    std::shared_ptr<ResponseCache> cache_;
    GatewayOptions options_;

    std::mutex slot_mutex_;
    std::condition_variable slot_cv_;
    std::size_t in_flight_ = 0;

    std::mutex rng_mutex_;
    std::uint64_t jitter_state_;

    std::atomic<std::uint64_t> remote_calls_{0};
    std::atomic<std::uint64_t> retries_{0};
    std::atomic<std::uint64_t> cache_hits_{0};
    std::atomic<std::uint64_t> cache_misses_{0};
};

}  // namespace recscale::llm
