#include "recscale/llm/canonical.hpp"

#include "recscale/common/hashing.hpp"

namespace recscale::llm {

using nlohmann::json;

json canonical_chat(const ChatRequest& request) {
    json messages = json::array();
    for (const auto& m : request.messages) {
        messages.push_back(json{{"role", to_string(m.role)}, {"content", m.content}});
    }
    return json{{"kind", "chat"},
                {"model_id", request.model_id},
                {"messages", std::move(messages)},
                {"temperature", static_cast<double>(request.temperature)},
                {"max_tokens", request.max_tokens},
                {"seed", request.seed ? json(*request.seed) : json(nullptr)}};
}

json canonical_embedding(const std::string& text, const std::string& model_id) {
    return json{{"kind", "embedding"}, {"model_id", model_id}, {"text", text}};
}

CacheKey cache_key(const json& canonical) {
    // Re-normalize in case the caller built it from ordered_json.
    return CacheKey{sha256_hex(json::parse(canonical.dump()).dump())};
}

CacheKey cache_key(const ChatRequest& request) { return CacheKey{sha256_hex(canonical_chat(request).dump())}; }

CacheKey embedding_cache_key(const std::string& text, const std::string& model_id) {
    return CacheKey{sha256_hex(canonical_embedding(text, model_id).dump())};
}

ChatRequest chat_request_from_json(const json& j) {
    ChatRequest r;
    r.model_id = j.at("model_id").get<std::string>();
    for (const auto& m : j.at("messages")) {
        r.messages.push_back({role_from_string(m.at("role").get<std::string>()), m.at("content").get<std::string>()});
    }
    r.temperature = j.value("temperature", 0.0);
    r.max_tokens = j.value("max_tokens", 1024);
    if (j.contains("seed") && !j.at("seed").is_null()) r.seed = j.at("seed").get<std::int64_t>();
    return r;
}

json response_to_json(const ChatResponse& response) {
    return json{{"text", response.text},
                {"finish_reason", to_string(response.finish_reason)},
                {"usage",
                 {{"prompt_tokens", response.usage.prompt_tokens},
                  {"completion_tokens", response.usage.completion_tokens}}}};
}

ChatResponse response_from_json(const json& j) {
    if (!j.is_object() || !j.contains("text") || !j.at("text").is_string()) {
        throw MalformedReply("stored response lacks a text field");
    }
    ChatResponse r;
    r.text = j.at("text").get<std::string>();
    r.finish_reason = finish_reason_from_string(j.value("finish_reason", std::string("stop")));
    if (j.contains("usage")) {
        r.usage.prompt_tokens = j.at("usage").value("prompt_tokens", 0);
        r.usage.completion_tokens = j.at("usage").value("completion_tokens", 0);
    }
    return r;
}

}  // namespace recscale::llm
