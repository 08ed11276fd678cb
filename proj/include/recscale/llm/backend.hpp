#pragma once

#include "recscale/llm/types.hpp"

#include <string>
#include <vector>

namespace recscale::llm {

// A remote (or simulated) model provider. Implementations may throw any
// GatewayError subtype; TransientError is retried by the Gateway.
class Backend {
public:
    virtual ~Backend() = default;

    virtual ChatResponse complete(const ChatRequest& request) = 0;

    virtual std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts, const std::string& model_id);

    virtual std::string describe() const = 0;
};

}  // namespace recscale::llm
