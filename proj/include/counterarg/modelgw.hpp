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

// Gateway to text-generation and embedding backends.
//
// Providers signal failure by throwing counterarg::Error. kProviderUnavailable,
// kRateLimited and kEmptyCompletion are transient and retried by the Gateway
// with exponential backoff; everything else propagates immediately.

#ifndef COUNTERARG_MODELGW_HPP_
#define COUNTERARG_MODELGW_HPP_

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "counterarg/error.hpp"
#include "counterarg/promptkit.hpp"

namespace counterarg::modelgw {

struct GenerationRequest {
  promptkit::PromptInstance prompt;
  std::string model_id;
  int max_tokens = 512;
  double temperature = 0.0;
  std::optional<std::int64_t> seed;

  // Throws Error(kInvalidArgument) when max_tokens < 1 or temperature < 0.
  void validate() const;
};

struct GenerationRecord {
  GenerationRequest request;
  std::string output_text;
  std::chrono::milliseconds latency{0};
  std::string provider;
  int attempt_count = 1;
};

struct EmbeddingVector {
  std::vector<double> values;
  std::size_t dim() const { return values.size(); }
  bool operator==(const EmbeddingVector&) const = default;
};

struct TokenEmbedding {
  std::string token;
  EmbeddingVector vector;
};

// Cosine similarity; 0 when either vector has zero norm. Clamped to [-1, 1].
double Cosine(const EmbeddingVector& a, const EmbeddingVector& b);

class TextProvider {
 public:
  virtual ~TextProvider() = default;
  virtual std::string name() const = 0;
  virtual std::string complete(const GenerationRequest& request) = 0;
};

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::string name() const = 0;
  // One vector per token, all of the same dimension. Throws kEmptyText.
  virtual std::vector<TokenEmbedding> embed_tokens(std::string_view text) = 0;
  virtual EmbeddingVector embed_sentence(std::string_view text) = 0;
};

// ---- Mock text providers ----------------------------------------------------

// Returns prefix + prompt text.
class EchoProvider : public TextProvider {
 public:
  explicit EchoProvider(std::string prefix = "ECHO:") : prefix_(std::move(prefix)) {}
  std::string name() const override { return "mock-echo"; }
  std::string complete(const GenerationRequest& request) override {
    return prefix_ + request.prompt.text;
  }

 private:
  std::string prefix_;
};

// Picks one of a fixed set of responses by a stable hash of the prompt text
// and the request seed.
class ChoiceProvider : public TextProvider {
 public:
  ChoiceProvider(std::vector<std::string> responses, std::uint64_t seed = 0);
  std::string name() const override { return "mock-choice"; }
  std::string complete(const GenerationRequest& request) override;

 private:
  std::vector<std::string> responses_;
  std::uint64_t seed_;
};

// Plays a script of outcomes in order; the last step repeats forever.
class ScriptedProvider : public TextProvider {
 public:
  struct Step {
    std::optional<std::string> output;  // nullopt = fail with `failure`
    Errc failure = Errc::kProviderUnavailable;
  };
  static Step Ok(std::string text) { return {std::move(text), {}}; }
  static Step Fail(Errc code = Errc::kProviderUnavailable) {
    return {std::nullopt, code};
  }

  explicit ScriptedProvider(std::vector<Step> script);
  std::string name() const override { return "mock-scripted"; }
  std::string complete(const GenerationRequest& request) override;
  std::size_t calls() const;

 private:
  mutable std::mutex mu_;
  std::vector<Step> script_;
  std::size_t next_ = 0;
};

class FunctionProvider : public TextProvider {
 public:
  using Fn = std::function<std::string(const GenerationRequest&)>;
  explicit FunctionProvider(Fn fn, std::string name = "mock-function")
      : fn_(std::move(fn)), name_(std::move(name)) {}
  std::string name() const override { return name_; }
  std::string complete(const GenerationRequest& request) override {
    return fn_(request);
  }

 private:
  Fn fn_;
  std::string name_;
};

// ---- Toy embedders ------------------------------------------------------------
// Both tokenize with counterarg::Tokenize and so ignore case, punctuation and
// surrounding whitespace.

// One-hot over an explicit token vocabulary. Out-of-vocabulary tokens map to
// the zero vector. A sentence is the unit-normalized bag of its tokens.
class OneHotEmbedder : public EmbeddingProvider {
 public:
  explicit OneHotEmbedder(std::vector<std::string> vocabulary);
  std::string name() const override { return "onehot"; }
  std::vector<TokenEmbedding> embed_tokens(std::string_view text) override;
  EmbeddingVector embed_sentence(std::string_view text) override;
  std::size_t dim() const { return vocabulary_.size(); }

 private:
  EmbeddingVector one_hot(std::string_view token) const;
  std::vector<std::string> vocabulary_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

// One-hot keyed on whole normalized sentences: two sentences have cosine 1 iff
// they normalize to the same string, else 0. Token embeddings are one-hot over
// the tokens of the sentence vocabulary.
class OneHotSentenceEmbedder : public EmbeddingProvider {
 public:
  explicit OneHotSentenceEmbedder(std::vector<std::string> sentences);
  std::string name() const override { return "onehot-sentence"; }
  std::vector<TokenEmbedding> embed_tokens(std::string_view text) override;
  EmbeddingVector embed_sentence(std::string_view text) override;

 private:
  std::map<std::string, std::size_t, std::less<>> sentence_index_;
  std::unique_ptr<OneHotEmbedder> tokens_;
};

// Seeded pseudo-random unit vectors per token. A sentence is the normalized sum
// of its token vectors.
class HashEmbedder : public EmbeddingProvider {
 public:
  explicit HashEmbedder(std::size_t dim = 64, std::uint64_t seed = 0);
  std::string name() const override { return "hash"; }
  std::vector<TokenEmbedding> embed_tokens(std::string_view text) override;
  EmbeddingVector embed_sentence(std::string_view text) override;
  EmbeddingVector token_vector(std::string_view token) const;

 private:
  std::size_t dim_;
  std::uint64_t seed_;
};

// ---- Remote providers ---------------------------------------------------------

struct HttpEndpoint {
  std::string base_url;  // e.g. https://api.openai.com/v1
  std::string model;
  std::string api_key_env;  // empty = no Authorization header
  std::chrono::milliseconds timeout{60000};
};

// OpenAI-compatible POST {base_url}/chat/completions.
class HttpChatProvider : public TextProvider {
 public:
  explicit HttpChatProvider(HttpEndpoint endpoint) : endpoint_(std::move(endpoint)) {}
  std::string name() const override { return "http-chat:" + endpoint_.model; }
  std::string complete(const GenerationRequest& request) override;

 private:
  HttpEndpoint endpoint_;
};

// OpenAI-compatible POST {base_url}/embeddings. Token embeddings send each
// token of the fixed tokenizer as a separate input.
class HttpEmbeddingProvider : public EmbeddingProvider {
 public:
  explicit HttpEmbeddingProvider(HttpEndpoint endpoint)
      : endpoint_(std::move(endpoint)) {}
  std::string name() const override { return "http-embed:" + endpoint_.model; }
  std::vector<TokenEmbedding> embed_tokens(std::string_view text) override;
  EmbeddingVector embed_sentence(std::string_view text) override;

 private:
  std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& inputs);
  HttpEndpoint endpoint_;
};

// ---- Gateway ------------------------------------------------------------------

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds base_delay{200};
  std::chrono::milliseconds max_delay{10000};
  double jitter = 0.5;  // delay scaled by a factor in [1 - jitter, 1]
};

// Backoff before attempt `attempt + 1`, given `attempt` failures so far.
std::chrono::milliseconds BackoffDelay(const RetryPolicy& policy, int attempt,
                                       std::uint64_t salt);

class Gateway {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  explicit Gateway(std::size_t max_in_flight = 4, RetryPolicy retry = {});

  // requests_per_second <= 0 disables rate limiting for the provider.
  void register_text(std::string model_id, std::shared_ptr<TextProvider> provider,
                     double requests_per_second = 0);
  void register_embedding(std::string model_id,
                          std::shared_ptr<EmbeddingProvider> provider);
  bool has_text(std::string_view model_id) const;
  bool has_embedding(std::string_view model_id) const;

  // Replaces the real sleep, e.g. to make retries instant in tests.
  void set_sleeper(Sleeper sleeper) { sleeper_ = std::move(sleeper); }

  GenerationRecord generate(const GenerationRequest& request);

  struct Outcome {
    std::optional<GenerationRecord> record;
    std::optional<Error> error;
  };
  // Runs every request with at most max_in_flight concurrent provider calls.
  // Outcomes are in request order.
  std::vector<Outcome> generate_all(std::span<const GenerationRequest> requests);

  EmbeddingProvider& embedder(std::string_view model_id) const;
  std::vector<TokenEmbedding> embed_tokens(std::string_view text,
                                           std::string_view model_id);
  EmbeddingVector embed_sentence(std::string_view text, std::string_view model_id);

  std::size_t max_in_flight() const { return max_in_flight_; }
  const RetryPolicy& retry_policy() const { return retry_; }

 private:
  struct RateLimiter {
    std::mutex mu;
    std::chrono::steady_clock::duration interval{};
    std::chrono::steady_clock::time_point next{};
  };
  struct TextEntry {
    std::shared_ptr<TextProvider> provider;
    std::shared_ptr<RateLimiter> limiter;
  };

  class Slot;
  void acquire();
  void release();
  void pace(RateLimiter& limiter);

  std::size_t max_in_flight_;
  RetryPolicy retry_;
  Sleeper sleeper_;
  std::map<std::string, TextEntry, std::less<>> text_;
  std::map<std::string, std::shared_ptr<EmbeddingProvider>, std::less<>> embed_;

  std::mutex slots_mu_;
  std::condition_variable slots_cv_;
  std::size_t in_flight_ = 0;
};

Json record_to_json(const GenerationRecord& record);

}  // namespace counterarg::modelgw

#endif  // COUNTERARG_MODELGW_HPP_
