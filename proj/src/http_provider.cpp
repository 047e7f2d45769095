#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <cstdlib>

#include "semrel/provider.hpp"

namespace semrel {

HttpProvider::HttpProvider(ProviderConfig config, std::string api_key)
    : config_(std::move(config)), api_key_(std::move(api_key)) {
  config_.validate();
}

HttpProvider HttpProvider::from_environment(const ProviderConfig& config) {
  const char* key = std::getenv(config.api_key_env.c_str());
  if (key == nullptr || *key == '\0')
    throw ConfigError("environment variable " + config.api_key_env + " is not set");
  return HttpProvider(config, key);
}

std::string HttpProvider::complete(const ProviderRequest& request) {
  httplib::Client client(config_.endpoint);
  const auto timeout = std::chrono::duration_cast<std::chrono::seconds>(config_.request_timeout);
  const auto secs = std::max<long long>(1, timeout.count());
  client.set_connection_timeout(static_cast<time_t>(secs), 0);
  client.set_read_timeout(static_cast<time_t>(secs), 0);
  client.set_write_timeout(static_cast<time_t>(secs), 0);

  nlohmann::json body = config_.options;
  body["contents"] = nlohmann::json::array(
      {{{"role", "user"}, {"parts", nlohmann::json::array({{{"text", request.prompt}}})}}});

  const std::string path = "/v1beta/models/" + config_.model_name + ":generateContent";
  const httplib::Headers headers = {{"x-goog-api-key", api_key_}};
  auto res = client.Post(path, headers, body.dump(), "application/json");
  if (!res) throw TransientProviderError("request failed: " + httplib::to_string(res.error()));

  const int status = res->status;
  if (status == 401 || status == 403)
    throw AuthenticationError("provider rejected credentials (HTTP " + std::to_string(status) + ")");
  if (status == 408 || status == 429 || status >= 500)
    throw TransientProviderError("HTTP " + std::to_string(status));
  if (status != 200)
    throw RequestRejectedError("HTTP " + std::to_string(status) + ": " + res->body.substr(0, 512));

  const auto reply = nlohmann::json::parse(res->body, nullptr, false);
  if (reply.is_discarded()) throw RequestRejectedError("provider returned non-JSON body");
  std::string text;
  try {
    for (const auto& part : reply.at("candidates").at(0).at("content").at("parts"))
      if (part.contains("text")) text += part.at("text").get<std::string>();
  } catch (const nlohmann::json::exception&) {
    throw RequestRejectedError("provider reply has no candidate text: " + res->body.substr(0, 512));
  }
  return text;
}

}  // namespace semrel
