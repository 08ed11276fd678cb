#include "recscale/llm/http_backend.hpp"

#include <nlohmann/json.hpp>

#include <cstdlib>

#include "httplib.h"

namespace recscale::llm {

using nlohmann::json;

namespace {

bool transient_status(int status) { return status == 408 || status == 409 || status == 429 || status >= 500; }

}  // namespace

OpenAiHttpBackend::OpenAiHttpBackend(HttpBackendConfig config) : config_(std::move(config)) {
    const auto scheme_end = config_.base_url.find("://");
    if (scheme_end == std::string::npos) {
        throw InvalidRequest("base_url must include a scheme: " + config_.base_url);
    }
    const auto path_start = config_.base_url.find('/', scheme_end + 3);
    origin_ = config_.base_url.substr(0, path_start);
    path_prefix_ = path_start == std::string::npos ? "" : config_.base_url.substr(path_start);
    while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
}

std::string OpenAiHttpBackend::describe() const { return "openai-compatible backend at " + config_.base_url; }

std::string OpenAiHttpBackend::post(const std::string& endpoint, const std::string& body) {
    httplib::Client client(origin_);
    const auto secs = static_cast<time_t>(config_.timeout_s);
    const auto usecs = static_cast<time_t>((config_.timeout_s - static_cast<double>(secs)) * 1e6);
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);

    httplib::Headers headers;
    for (const auto& [k, v] : config_.headers) headers.emplace(k, v);
    if (!config_.api_key_env.empty()) {
        const char* key = std::getenv(config_.api_key_env.c_str());
        if (key == nullptr || *key == '\0') {
            throw AuthError("environment variable " + config_.api_key_env + " is not set");
        }
        headers.emplace("Authorization", std::string("Bearer ") + key);
    }

    auto res = client.Post(path_prefix_ + endpoint, headers, body, "application/json");
    if (!res) {
        throw TransientError("transport error: " + httplib::to_string(res.error()));
    }
    if (res->status == 401 || res->status == 403) {
        throw AuthError("authentication failed (HTTP " + std::to_string(res->status) + ")");
    }
    if (transient_status(res->status)) {
        throw TransientError("HTTP " + std::to_string(res->status), res->status);
    }
    if (res->status < 200 || res->status >= 300) {
        throw GatewayError("HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200));
    }
    return res->body;
}

ChatResponse OpenAiHttpBackend::complete(const ChatRequest& request) {
    json messages = json::array();
    for (const auto& m : request.messages) {
        messages.push_back({{"role", to_string(m.role)}, {"content", m.content}});
    }
    json body{{"model", request.model_id},
              {"messages", std::move(messages)},
              {"temperature", request.temperature},
              {"max_tokens", request.max_tokens}};
    if (request.seed) body["seed"] = *request.seed;

    const std::string raw = post("/chat/completions", body.dump());
    try {
        const json reply = json::parse(raw);
        const json& choice = reply.at("choices").at(0);
        ChatResponse out;
        const json& content = choice.at("message").at("content");
        out.text = content.is_null() ? std::string{} : content.get<std::string>();
        const json& finish = choice.contains("finish_reason") ? choice.at("finish_reason") : json(nullptr);
        out.finish_reason = finish.is_string() ? finish_reason_from_string(finish.get<std::string>()) : FinishReason::stop;
        if (reply.contains("usage") && reply.at("usage").is_object()) {
            out.usage.prompt_tokens = reply.at("usage").value("prompt_tokens", 0);
            out.usage.completion_tokens = reply.at("usage").value("completion_tokens", 0);
        }
        return out;
    } catch (const json::exception& e) {
        throw MalformedReply(std::string("malformed chat completion: ") + e.what());
    }
}

std::vector<EmbeddingVector> OpenAiHttpBackend::embed(const std::vector<std::string>& texts,
                                                      const std::string& model_id) {
    const json body{{"model", model_id}, {"input", texts}};
    const std::string raw = post("/embeddings", body.dump());
    try {
        const json reply = json::parse(raw);
        std::vector<EmbeddingVector> out(texts.size());
        std::vector<bool> seen(texts.size(), false);
        for (const auto& item : reply.at("data")) {
            const auto idx = item.value("index", std::size_t{0});
            if (idx >= texts.size() || seen[idx]) throw MalformedReply("embedding index out of range or repeated");
            out[idx] = EmbeddingVector{item.at("embedding").get<std::vector<double>>(), model_id};
            seen[idx] = true;
        }
        for (bool s : seen) {
            if (!s) throw MalformedReply("embedding reply is missing entries");
        }
        return out;
    } catch (const json::exception& e) {
        throw MalformedReply(std::string("malformed embedding reply: ") + e.what());
    }
}

}  // namespace recscale::llm
