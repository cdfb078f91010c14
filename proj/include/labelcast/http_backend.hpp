#pragma once

#include <map>
#include <string>
#include <vector>

#include "labelcast/backend.hpp"

namespace labelcast {

struct HttpEndpointConfig {
  std::string base_url;          // e.g. http://host:port
  std::string path = "/v1/chat/completions";
  std::string api_key_env;       // environment variable holding the key; empty = no auth
  int timeout_seconds = 30;
  int max_attempts = 3;          // fixed retry policy
};

// Thin chat-completions-style JSON client. One prompt template per label,
// fixed: the model is asked to answer with a single integer, and the response
// must carry token logprobs and usage.
class HttpBackend : public Backend {
 public:
  HttpBackend(std::vector<ModelSpec> pool, HttpEndpointConfig endpoint);

  const ModelSpec& spec(const std::string& model) const override;
  bool has_model(const std::string& model) const override;

  static std::string prompt_for(const Email& email, const LabelDef& label);

 protected:
  GenerationResult generate_uncached(const std::string& model, const Email& email,
                                     const LabelDef& label) override;
  std::vector<double> embed_uncached(const std::string& model, const Email& email) override;

 private:
  std::string post_json(const std::string& path, const std::string& body);

  std::map<std::string, ModelSpec> pool_;
  HttpEndpointConfig endpoint_;
};

}  // namespace labelcast
