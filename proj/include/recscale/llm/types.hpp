#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace recscale::llm {

enum class Role { system, user, assistant };

const char* to_string(Role role);
Role role_from_string(const std::string& s);

struct Message {
    Role role = Role::user;
    std::string content;

    bool operator==(const Message&) const = default;
};

struct ChatRequest {
    std::string model_id;
    std::vector<Message> messages;
    double temperature = 0.0;
    int max_tokens = 1024;
    std::optional<std::int64_t> seed;
};

// Throws InvalidRequest when the request violates the ChatRequest contract.
void validate(const ChatRequest& request);

inline ChatRequest single_turn(std::string model_id, std::string prompt, double temperature, int max_tokens,
                               std::optional<std::int64_t> seed = std::nullopt) {
    ChatRequest r;
    r.model_id = std::move(model_id);
    r.messages.push_back({Role::user, std::move(prompt)});
    r.temperature = temperature;
    r.max_tokens = max_tokens;
    r.seed = seed;
    return r;
}

enum class FinishReason { stop, length, error };

const char* to_string(FinishReason reason);
FinishReason finish_reason_from_string(const std::string& s);

struct Usage {
    int prompt_tokens = 0;
    int completion_tokens = 0;
};

struct ChatResponse {
    std::string text;
    FinishReason finish_reason = FinishReason::stop;
    Usage usage;
    bool cached = false;
};

struct EmbeddingVector {
    std::vector<double> values;
    std::string model_id;
};

class GatewayError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidRequest : public GatewayError {
public:
    using GatewayError::GatewayError;
};

// Retryable: rate limiting, 5xx, timeouts, dropped connections.
class TransientError : public GatewayError {
public:
    explicit TransientError(const std::string& what, int status = 0) : GatewayError(what), status_(status) {}
    int status() const { return status_; }

private:
    int status_;
};

class AuthError : public GatewayError {
public:
    using GatewayError::GatewayError;
};

class MalformedReply : public GatewayError {
public:
    using GatewayError::GatewayError;
};

class RetriesExhausted : public GatewayError {
public:
    RetriesExhausted(const std::string& what, int attempts) : GatewayError(what), attempts_(attempts) {}
    int attempts() const { return attempts_; }

private:
    int attempts_;
};

class MissingTranscriptEntry : public GatewayError {
public:
    explicit MissingTranscriptEntry(const std::string& digest)
        : GatewayError("no transcript entry for request digest " + digest), digest_(digest) {}
    const std::string& digest() const { return digest_; }

private:
    std::string digest_;
};

}  // namespace recscale::llm
