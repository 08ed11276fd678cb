#pragma once

#include "recscale/llm/types.hpp"

#include <nlohmann/json.hpp>

#include <string>

namespace recscale::llm {

// Canonical request forms. nlohmann::json objects keep keys sorted, and the
// digest is taken over the compact dump, so field insertion order and source
// whitespace never affect the key; message order does.
nlohmann::json canonical_chat(const ChatRequest& request);
nlohmann::json canonical_embedding(const std::string& text, const std::string& model_id);

struct CacheKey {
    std::string digest;  // 64 hex chars, SHA-256

    bool operator==(const CacheKey&) const = default;
};

CacheKey cache_key(const nlohmann::json& canonical);
CacheKey cache_key(const ChatRequest& request);
CacheKey embedding_cache_key(const std::string& text, const std::string& model_id);

ChatRequest chat_request_from_json(const nlohmann::json& j);

nlohmann::json response_to_json(const ChatResponse& response);
ChatResponse response_from_json(const nlohmann::json& j);

}  // namespace recscale::llm
