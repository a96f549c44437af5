#pragma once

// Real HTTP transport (cpp-httplib) and construction of a ModelClient from
// an endpoint's base_url: `http(s)://...`, `mock:<script.jsonl>` or
// `mock-bernoulli:<p>[:<seed>]`.

#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>

#include <lemmaguide/errors.hpp>
#include <lemmaguide/model_clients.hpp>

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>

namespace lemmaguide {

class HttplibTransport : public HttpTransport {
 public:
  HttpResponse post(const std::string& base_url, const std::string& path, const std::string& body,
                    const Headers& headers, double timeout_s) override {
    const std::size_t scheme_end = base_url.find("://");
    const std::size_t host_end =
        base_url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
    const std::string origin = base_url.substr(0, host_end);
    const std::string prefix = host_end == std::string::npos ? "" : base_url.substr(host_end);

    httplib::Client client(origin);
    const auto timeout = std::chrono::duration<double>(timeout_s);
    client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    client.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    httplib::Headers h;
    std::string content_type = "application/json";
    for (const auto& [k, v] : headers) {
      if (k == "Content-Type") {
        content_type = v;
      } else if (k.rfind("X-Lemmaguide-", 0) != 0) {
        h.emplace(k, v);
      }
    }
    auto result = client.Post(prefix + path, h, body, content_type);
    if (!result) return HttpResponse{0, httplib::to_string(result.error()), std::nullopt};
    return HttpResponse{result->status, result->body, std::nullopt};
  }
};

/// Shares one transport per mock script so several roles pointing at the
/// same file consume a single script.
class TransportRegistry {
 public:
  explicit TransportRegistry(std::filesystem::path base_dir = {}) : base_dir_(std::move(base_dir)) {}

  std::shared_ptr<HttpTransport> for_url(const std::string& base_url) {
    std::lock_guard lock(mutex_);
    if (auto it = cache_.find(base_url); it != cache_.end()) return it->second;
    std::shared_ptr<HttpTransport> transport;
    if (base_url.rfind("mock-bernoulli:", 0) == 0) {
      const std::string spec = base_url.substr(15);
      const std::size_t colon = spec.find(':');
      try {
        const double p = std::stod(spec.substr(0, colon));
        const std::uint64_t seed = colon == std::string::npos ? 0 : std::stoull(spec.substr(colon + 1));
        if (p < 0.0 || p > 1.0) throw std::out_of_range("p");
        transport = std::make_shared<BernoulliProverTransport>(p, seed);
      } catch (const std::logic_error&) {
        throw Error(ErrorCode::config_error, "bad mock-bernoulli spec: " + base_url);
      }
    } else if (base_url.rfind("mock:", 0) == 0) {
      std::filesystem::path path = base_url.substr(5);
      if (path.is_relative() && !base_dir_.empty()) path = base_dir_ / path;
      transport = ScriptTransport::from_file(path);
    } else if (base_url.rfind("http://", 0) == 0 || base_url.rfind("https://", 0) == 0) {
      transport = std::make_shared<HttplibTransport>();
    } else {
      throw Error(ErrorCode::config_error, "unsupported base_url: " + base_url);
    }
    cache_.emplace(base_url, transport);
    return transport;
  }

  static bool is_mock(const std::string& base_url) { return base_url.rfind("mock", 0) == 0; }

 private:
  std::filesystem::path base_dir_;
  std::mutex mutex_;
  std::map<std::string, std::shared_ptr<HttpTransport>> cache_;
};

/// Mock endpoints retry without sleeping so scripted fault injection stays fast.
inline std::unique_ptr<ModelClient> make_model_client(const EndpointConfig& config,
                                                      TransportRegistry& registry) {
  auto transport = registry.for_url(config.base_url);
  if (TransportRegistry::is_mock(config.base_url)) {
    return std::make_unique<ChatClient>(config, std::move(transport), [](double) {});
  }
  return std::make_unique<ChatClient>(config, std::move(transport));
}

}  // namespace lemmaguide
