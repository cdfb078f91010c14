#include "labelcast/http_backend.hpp"

#include <cstdlib>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

namespace labelcast {

using nlohmann::json;

HttpBackend::HttpBackend(std::vector<ModelSpec> pool, HttpEndpointConfig endpoint)
    : endpoint_(std::move(endpoint)) {
  for (auto& s : pool) pool_[s.name] = s;
  if (endpoint_.base_url.empty()) throw ConfigError("http backend needs a base_url");
}

const ModelSpec& HttpBackend::spec(const std::string& model) const {
  auto it = pool_.find(model);
  if (it == pool_.end()) throw ConfigError("unknown model: " + model);
  return it->second;
}

bool HttpBackend::has_model(const std::string& model) const { return pool_.count(model) > 0; }

std::string HttpBackend::prompt_for(const Email& email, const LabelDef& label) {
  std::ostringstream os;
  os << "You label emails. Label: " << label.name << ". Allowed values:";
  for (int c : label.classes) os << ' ' << c;
  os << ". Answer with a single integer.\n";
  os << "Subject: " << email.subject << "\n";
  os << "Body: " << email.body << "\n";
  return os.str();
}

std::string HttpBackend::post_json(const std::string& path, const std::string& body) {
  httplib::Client client(endpoint_.base_url);
  client.set_connection_timeout(endpoint_.timeout_seconds);
  client.set_read_timeout(endpoint_.timeout_seconds);
  httplib::Headers headers;
  if (!endpoint_.api_key_env.empty()) {
    const char* key = std::getenv(endpoint_.api_key_env.c_str());
    if (key) headers.emplace("Authorization", std::string("Bearer ") + key);
  }
  std::string last_error;
  for (int attempt = 0; attempt < endpoint_.max_attempts; ++attempt) {
    auto res = client.Post(path, headers, body, "application/json");
    if (res && res->status == 200) return res->body;
    last_error = res ? "http status " + std::to_string(res->status)
                     : "transport error " + httplib::to_string(res.error());
  }
  throw BackendUnavailable("endpoint " + endpoint_.base_url + path + " failed after " +
                           std::to_string(endpoint_.max_attempts) + " attempts: " + last_error);
}

GenerationResult HttpBackend::generate_uncached(const std::string& model, const Email& email,
                                                const LabelDef& label) {
  json req;
  req["model"] = model;
  req["messages"] = json::array({json{{"role", "user"}, {"content", prompt_for(email, label)}}});
  req["logprobs"] = true;
  req["max_tokens"] = 8;
  std::string body = post_json(endpoint_.path, req.dump());

  json res;
  try {
    res = json::parse(body);
  } catch (const json::exception& e) {
    throw MalformedOutput(std::string("unparseable response: ") + e.what());
  }

  TokenUsage usage;
  if (res.contains("usage")) {
    usage.input_tokens = res["usage"].value("prompt_tokens", std::int64_t{0});
    usage.output_tokens = res["usage"].value("completion_tokens", std::int64_t{0});
  }
  if (usage.input_tokens == 0)
    usage.input_tokens = estimate_tokens(email.subject, email.body);

  try {
    const json& choice = res.at("choices").at(0);
    std::string content = choice.at("message").at("content").get<std::string>();
    std::vector<double> logprobs;
    if (choice.contains("logprobs") && choice["logprobs"].contains("content"))
      for (const auto& tok : choice["logprobs"]["content"])
        logprobs.push_back(tok.at("logprob").get<double>());
    if (logprobs.empty())
      throw MalformedOutput("response carries no token logprobs", usage);
    if (usage.output_tokens == 0)
      usage.output_tokens = static_cast<std::int64_t>(logprobs.size());

    int value = 0;
    std::size_t pos = 0;
    // strip whitespace, read one integer
    std::string trimmed;
    for (char c : content)
      if (!std::isspace(static_cast<unsigned char>(c))) trimmed.push_back(c);
    value = std::stoi(trimmed, &pos);
    if (pos != trimmed.size())
      throw MalformedOutput("response is not a single integer: " + content, usage);

    GenerationResult r;
    r.value = {label.name, value};
    r.token_logprobs = std::move(logprobs);
    r.usage = usage;
    return r;
  } catch (const MalformedOutput&) {
    throw;
  } catch (const std::exception& e) {
    throw MalformedOutput(std::string("bad response shape: ") + e.what(), usage);
  }
}

std::vector<double> HttpBackend::embed_uncached(const std::string& model, const Email& email) {
  json req;
  req["model"] = model;
  req["input"] = email.subject + "\n" + email.body;
  std::string body = post_json("/v1/embeddings", req.dump());
  try {
    json res = json::parse(body);
    return res.at("data").at(0).at("embedding").get<std::vector<double>>();
  } catch (const std::exception& e) {
    throw MalformedOutput(std::string("bad embedding response: ") + e.what());
  }
}

}  // namespace labelcast
