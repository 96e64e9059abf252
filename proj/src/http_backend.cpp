#include "finbench/http_backend.hpp"

#include <cstdlib>
#include <stdexcept>

#include <httplib.h>
#include <json.hpp>

namespace finbench::backend {

using nlohmann::json;

HttpBackend::HttpBackend(std::string endpoint, std::string api_key_env)
    : endpoint_(std::move(endpoint)) {
  const char* key = std::getenv(api_key_env.c_str());
  if (key) api_key_ = key;
  // split "http://host:port/path"
  auto scheme_end = endpoint_.find("://");
  if (scheme_end == std::string::npos)
    throw std::invalid_argument("http backend: endpoint must carry a scheme: " + endpoint_);
  auto path_start = endpoint_.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    host_ = endpoint_;
    path_ = "/v1/completions";
  } else {
    host_ = endpoint_.substr(0, path_start);
    path_ = endpoint_.substr(path_start);
  }
}

CompletionResult HttpBackend::complete(const ModelProfile& profile,
                                       const CompletionRequest& req) {
  if (req.prompt_tokens > profile.context_window)
    throw ContextOverflowError(profile.context_window, req.prompt_tokens);

  json body;
  body["model"] = profile.name;
  body["role"] = to_string(req.role);
  body["temperature"] = req.temperature;
  body["doc_id"] = req.doc_id;
  body["sections"] = req.section_scope;
  json fields = json::array();
  for (const auto& f : req.fields)
    fields.push_back({{"field_id", f.field_id}, {"pass", f.pass}, {"critiques", f.critiques}});
  body["fields"] = std::move(fields);

  httplib::Client client(host_);
  client.set_read_timeout(120, 0);
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
  auto res = client.Post(path_, headers, body.dump(), "application/json");
  if (!res)
    throw std::runtime_error("http backend: request to " + host_ + path_ + " failed");
  if (res->status != 200)
    throw std::runtime_error("http backend: status " + std::to_string(res->status));

  json j = json::parse(res->body);
  CompletionResult out;
  out.input_tokens = j.value("input_tokens", req.prompt_tokens);
  out.output_tokens = j.value("output_tokens", int64_t{1});
  out.latency = j.value("latency", 1.0);
  if (j.contains("records")) {
    for (const auto& r : j.at("records")) {
      EmittedRecord rec;
      rec.field_id = r.at("field_id").get<std::string>();
      auto kind = schema::kind_from_string(r.value("kind", "string"));
      auto scale = schema::unit_scale_from_string(r.value("unit", "raw"));
      auto v = schema::value_from_field(kind.value_or(schema::FieldKind::String),
                                        r.value("value", "__ABSENT__"),
                                        scale.value_or(schema::UnitScale::Raw));
      if (v) rec.value = *v;
      rec.confidence = r.value("confidence", 0.5);
      out.records.push_back(std::move(rec));
    }
  }
  return out;
}

}  // namespace finbench::backend
