#pragma once

#include "recscale/common/files.hpp"
#include "recscale/llm/backend.hpp"

#include <map>
#include <memory>
#include <mutex>

namespace recscale::llm {

// Transcript: JSON-lines of {"digest": <CacheKey digest>, "response": {...}}.
// Chat responses store {text, finish_reason, usage}; embeddings store
// {"embedding": [...]} keyed by the per-text embedding digest.
class PlaybackBackend : public Backend {
public:
    explicit PlaybackBackend(const fs::path& transcript);

    ChatResponse complete(const ChatRequest& request) override;
    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts, const std::string& model_id) override;
    std::string describe() const override { return "playback of " + source_; }

    std::size_t size() const { return entries_.size(); }

private:
    const json& lookup(const std::string& digest) const;

    std::string source_;
    std::map<std::string, json> entries_;
};

// Forwards to `inner` and records every reply. save() merges with any
// existing transcript at the target path and writes entries sorted by digest.
class RecordingBackend : public Backend {
public:
    RecordingBackend(std::shared_ptr<Backend> inner, fs::path transcript);

    ChatResponse complete(const ChatRequest& request) override;
    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts, const std::string& model_id) override;
    std::string describe() const override { return "recording(" + inner_->describe() + ")"; }

    void save() const;
    std::size_t size() const;

private:
    std::shared_ptr<Backend> inner_;
    fs::path transcript_;
    mutable std::mutex mutex_;
    std::map<std::string, json> entries_;
};

}  // namespace recscale::llm
