#pragma once

#include "recscale/llm/backend.hpp"

#include <map>
#include <string>

namespace recscale::llm {

struct HttpBackendConfig {
    std::string base_url;     // e.g. https://api.openai.com/v1
    std::string api_key_env;  // environment variable holding the bearer token; empty = no auth
    double timeout_s = 60.0;
    std::map<std::string, std::string> headers;
};

// OpenAI-compatible chat-completions and embeddings over HTTP(S).
//   POST {base_url}/chat/completions
//   POST {base_url}/embeddings
// 408, 409, 429 and 5xx responses and transport failures raise TransientError;
// 401/403 raise AuthError; unparseable bodies raise MalformedReply.
class OpenAiHttpBackend : public Backend {
public:
    explicit OpenAiHttpBackend(HttpBackendConfig config);

    ChatResponse complete(const ChatRequest& request) override;
    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts, const std::string& model_id) override;
    std::string describe() const override;

private:
    std::string post(const std::string& endpoint, const std::string& body);

    HttpBackendConfig config_;
    std::string origin_;       // scheme://host[:port]
    std::string path_prefix_;  // "/v1"
};

}  // namespace recscale::llm
