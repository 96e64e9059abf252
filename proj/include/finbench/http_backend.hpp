#pragma once

#include <string>

#include "finbench/backend.hpp"

namespace finbench::backend {

// Thin shell over a real chat-completion endpoint, conforming to the
// complete() contract. Credentials come from an environment variable; no
// retries or provider-specific schemas. Exercised only by the opt-in
// integration test so the offline suite stays hermetic.
class HttpBackend : public Backend {
 public:
  HttpBackend(std::string endpoint, std::string api_key_env = "FINBENCH_API_KEY");

  CompletionResult complete(const ModelProfile& profile, const CompletionRequest& req) override;

  const std::string& endpoint() const { return endpoint_; }
  bool has_credentials() const { return !api_key_.empty(); }

 private:
  std::string endpoint_;
  std::string host_;
  std::string path_;
  std::string api_key_;
};

}  // namespace finbench::backend
