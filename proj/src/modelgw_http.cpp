// Copyright 2026 The Counterarg Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// HTTP chat-completion and embedding providers.

#include <cstdlib>

#include "counterarg/modelgw.hpp"
#include "counterarg/tokenize.hpp"
#include "httplib.h"

namespace counterarg::modelgw {
namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path without trailing slash
};

SplitUrl ParseBaseUrl(const std::string& url) {
  const std::size_t scheme = url.find("://");
  if (scheme == std::string::npos) {
    throw Error(Errc::kConfigInvalid, "base_url needs a scheme: " + url);
  }
  const std::size_t slash = url.find('/', scheme + 3);
  SplitUrl out;
  out.origin = url.substr(0, slash);
  if (slash != std::string::npos) out.prefix = url.substr(slash);
  while (!out.prefix.empty() && out.prefix.back() == '/') out.prefix.pop_back();
  return out;
}

Json PostJson(const HttpEndpoint& ep, const std::string& path, const Json& body) {
  httplib::Headers headers;
  if (!ep.api_key_env.empty()) {
    const char* key = std::getenv(ep.api_key_env.c_str());
    if (key == nullptr || *key == '\0') {
      throw Error(Errc::kAuthMissing,
                  "environment variable " + ep.api_key_env + " is not set");
    }
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }

  const SplitUrl url = ParseBaseUrl(ep.base_url);
  httplib::Client client(url.origin);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(ep.timeout);
  client.set_connection_timeout(secs.count() > 0 ? secs.count() : 1);
  client.set_read_timeout(secs.count() > 0 ? secs.count() : 1);

  auto res = client.Post(url.prefix + path, headers, body.dump(), "application/json");
  if (!res) {
    throw Error(Errc::kProviderUnavailable,
                ep.base_url + ": " + httplib::to_string(res.error()));
  }
  if (res->status == 401 || res->status == 403) {
    throw Error(Errc::kAuthMissing, ep.base_url + " rejected credentials");
  }
  if (res->status == 429) {
    Error e(Errc::kRateLimited, ep.base_url + " returned 429");
    if (res->has_header("Retry-After")) {
      try {
        e.with_retry_after(std::chrono::milliseconds(
            static_cast<long long>(std::stod(res->get_header_value("Retry-After")) * 1000)));
      } catch (const std::exception&) {
        // HTTP-date form; fall back to backoff.
      }
    }
    throw e;
  }
  if (res->status >= 500) {
    throw Error(Errc::kProviderUnavailable,
                ep.base_url + " returned " + std::to_string(res->status));
  }
  if (res->status != 200) {
    throw Error(Errc::kInvalidArgument, ep.base_url + " returned " +
                                            std::to_string(res->status) + ": " +
                                            res->body);
  }
  try {
    return Json::parse(res->body);
  } catch (const Json::exception& e) {
    throw Error(Errc::kProviderUnavailable, "unparseable response: " +
                                                std::string(e.what()));
  }
}

}  // namespace

std::string HttpChatProvider::complete(const GenerationRequest& request) {
  Json body{{"model", endpoint_.model},
            {"messages", Json::array({{{"role", "user"},
                                       {"content", request.prompt.text}}})},
            {"max_tokens", request.max_tokens},
            {"temperature", request.temperature}};
  if (request.seed) body["seed"] = *request.seed;

  const Json reply = PostJson(endpoint_, "/chat/completions", body);
  try {
    const Json& content = reply.at("choices").at(0).at("message").at("content");
    if (content.is_null()) return {};
    return content.get<std::string>();
  } catch (const Json::exception&) {
    throw Error(Errc::kEmptyCompletion, "response has no message content");
  }
}

std::vector<EmbeddingVector> HttpEmbeddingProvider::embed_batch(
    const std::vector<std::string>& inputs) {
  const Json reply = PostJson(endpoint_, "/embeddings",
                              Json{{"model", endpoint_.model}, {"input", inputs}});
  std::vector<EmbeddingVector> out(inputs.size());
  try {
    const Json& data = reply.at("data");
    if (data.size() != inputs.size()) {
      throw Error(Errc::kProviderUnavailable, "embedding count mismatch");
    }
    for (std::size_t i = 0; i < data.size(); ++i) {
      const std::size_t index = data[i].value("index", i);
      if (index >= out.size()) {
        throw Error(Errc::kProviderUnavailable, "embedding index out of range");
      }
      out[index].values = data[i].at("embedding").get<std::vector<double>>();
    }
  } catch (const Json::exception& e) {
    throw Error(Errc::kProviderUnavailable, std::string("bad embedding reply: ") + e.what());
  }
  for (const EmbeddingVector& v : out) {
    if (v.dim() == 0 || v.dim() != out[0].dim()) {
      throw Error(Errc::kProviderUnavailable, "inconsistent embedding dimensions");
    }
  }
  return out;
}

std::vector<TokenEmbedding> HttpEmbeddingProvider::embed_tokens(std::string_view text) {
  std::vector<std::string> tokens = Tokenize(text);
  if (tokens.empty()) throw Error(Errc::kEmptyText, "text has no tokens");
  std::vector<EmbeddingVector> vectors = embed_batch(tokens);
  std::vector<TokenEmbedding> out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    out.push_back({std::move(tokens[i]), std::move(vectors[i])});
  }
  return out;
}

EmbeddingVector HttpEmbeddingProvider::embed_sentence(std::string_view text) {
  std::string trimmed = Trim(text);
  if (trimmed.empty()) throw Error(Errc::kEmptyText, "empty text");
  return embed_batch({trimmed}).front();
}

}  // namespace counterarg::modelgw
