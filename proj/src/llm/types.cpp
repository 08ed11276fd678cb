#include "recscale/llm/types.hpp"

namespace recscale::llm {

const char* to_string(Role role) {
    switch (role) {
        case Role::system: return "system";
        case Role::user: return "user";
        case Role::assistant: return "assistant";
    }
    return "user";
}

Role role_from_string(const std::string& s) {
    if (s == "system") return Role::system;
    if (s == "user") return Role::user;
    if (s == "assistant") return Role::assistant;
    throw InvalidRequest("unknown role: " + s);
}

const char* to_string(FinishReason reason) {
    switch (reason) {
        case FinishReason::stop: return "stop";
        case FinishReason::length: return "length";
        case FinishReason::error: return "error";
    }
    return "error";
}

FinishReason finish_reason_from_string(const std::string& s) {
    if (s == "stop") return FinishReason::stop;
    if (s == "length") return FinishReason::length;
    return FinishReason::error;
}

void validate(const ChatRequest& request) {
    if (request.model_id.empty()) throw InvalidRequest("model_id is empty");
    if (request.messages.empty()) throw InvalidRequest("messages are empty");
    if (request.temperature < 0.0) throw InvalidRequest("temperature must be >= 0");
    if (request.max_tokens <= 0) throw InvalidRequest("max_tokens must be positive");
    for (const auto& m : request.messages) {
        if (m.role == Role::system) continue;
        if (m.role != Role::user) throw InvalidRequest("first non-system message must be from the user");
        break;
    }
}

}  // namespace recscale::llm
