#pragma once

#include "recscale/llm/backend.hpp"

#include <atomic>
#include <cstddef>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

namespace recscale::llm {

// Replies from substring rules over the concatenated message contents, in
// rule order; falls back to `fallback` or throws GatewayError.
class ScriptedBackend : public Backend {
public:
    using Responder = std::function<std::string(const ChatRequest&, std::size_t call_index)>;

    ScriptedBackend() = default;
    explicit ScriptedBackend(Responder fallback) : fallback_(std::move(fallback)) {}

    ScriptedBackend& on(std::string substring, std::string reply);

    ChatResponse complete(const ChatRequest& request) override;
    std::string describe() const override { return "scripted backend"; }

    std::size_t calls() const { return calls_.load(); }
    std::vector<ChatRequest> requests() const;

private:
    std::vector<std::pair<std::string, std::string>> rules_;
    Responder fallback_;
    std::atomic<std::size_t> calls_{0};
    mutable std::mutex log_mutex_;
    std::vector<ChatRequest> log_;
};

// Fails the first `failures` calls with TransientError(status), then
// delegates.
class FlakyBackend : public Backend {
public:
    FlakyBackend(std::shared_ptr<Backend> inner, int failures, int status = 429)
        : inner_(std::move(inner)), remaining_(failures), status_(status) {}

    ChatResponse complete(const ChatRequest& request) override;
    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts, const std::string& model_id) override;
    std::string describe() const override { return "flaky(" + inner_->describe() + ")"; }

private:
    void maybe_fail();

    std::shared_ptr<Backend> inner_;
    std::atomic<int> remaining_;
    int status_;
};

// Hash-derived unit vectors. For text t and dimension D:
//   g = SplitMix64(fnv1a64(t)); component j = (top bit of g.next() ? +1 : -1) / sqrt(D)
// so every vector has norm exactly 1 and for two texts with sign patterns
// differing in h positions, cosine(a, b) = (D - 2h) / D.
class HashEmbeddingBackend : public Backend {
public:
    explicit HashEmbeddingBackend(std::size_t dim = 256) : dim_(dim) {}

    ChatResponse complete(const ChatRequest& request) override;
    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts, const std::string& model_id) override;
    std::string describe() const override { return "hash embedding backend"; }

    static std::vector<double> vector_for(const std::string& text, std::size_t dim);

private:
    std::size_t dim_;
};

// Deterministic stand-in for every model role of the pipeline. It recognises
// the repository's prompt templates (policy, continuation, reward,
// recommender, judge) and answers in the format each one requests, as a pure
// function of (model_id, prompt, seed). Model ids containing "o1", "o3",
// "r1", "reason" or "thinking" behave as long-reasoning policies: more
// features per answer and longer definitions. Embeddings are delegated to
// HashEmbeddingBackend.
class SimulatedBackend : public Backend {
public:
    explicit SimulatedBackend(std::size_t embedding_dim = 256) : embedder_(embedding_dim) {}

    ChatResponse complete(const ChatRequest& request) override;
    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts, const std::string& model_id) override;
    std::string describe() const override { return "simulated backend"; }

private:
    HashEmbeddingBackend embedder_;
};

}  // namespace recscale::llm
