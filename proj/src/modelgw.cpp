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

#include "counterarg/modelgw.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "counterarg/tokenize.hpp"
#include "counterarg/util.hpp"

namespace counterarg::modelgw {
namespace {

bool IsTransient(Errc code) {
  return code == Errc::kProviderUnavailable || code == Errc::kRateLimited ||
         code == Errc::kEmptyCompletion;
}

void Normalize(std::vector<double>& v) {
  double norm = 0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  if (norm > 0) {
    for (double& x : v) x /= norm;
  }
}

std::vector<std::string> TokensOrThrow(std::string_view text) {
  auto tokens = Tokenize(text);
  if (tokens.empty()) throw Error(Errc::kEmptyText, "text has no tokens");
  return tokens;
}

}  // namespace

void GenerationRequest::validate() const {
  if (max_tokens < 1) throw Error(Errc::kInvalidArgument, "max_tokens < 1");
  if (!(temperature >= 0)) throw Error(Errc::kInvalidArgument, "temperature < 0");
}

double Cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dim() != b.dim()) {
    throw Error(Errc::kInvalidArgument, "embedding dimensions differ");
  }
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    dot += a.values[i] * b.values[i];
    na += a.values[i] * a.values[i];
    nb += b.values[i] * b.values[i];
  }
  if (na == 0 || nb == 0) return 0.0;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

ChoiceProvider::ChoiceProvider(std::vector<std::string> responses,
                               std::uint64_t seed)
    : responses_(std::move(responses)), seed_(seed) {
  if (responses_.empty()) {
    throw Error(Errc::kInvalidArgument, "ChoiceProvider needs responses");
  }
}

std::string ChoiceProvider::complete(const GenerationRequest& request) {
  std::uint64_t h = SplitMix64(Fnv1a64(request.prompt.text) ^ seed_);
  if (request.seed) h = SplitMix64(h ^ static_cast<std::uint64_t>(*request.seed));
  return responses_[h % responses_.size()];
}

ScriptedProvider::ScriptedProvider(std::vector<Step> script)
    : script_(std::move(script)) {
  if (script_.empty()) {
    throw Error(Errc::kInvalidArgument, "ScriptedProvider needs a script");
  }
}

std::string ScriptedProvider::complete(const GenerationRequest&) {
  std::lock_guard lock(mu_);
  const Step& step = script_[std::min(next_, script_.size() - 1)];
  ++next_;
  if (!step.output) throw Error(step.failure, "scripted failure");
  return *step.output;
}

std::size_t ScriptedProvider::calls() const {
  std::lock_guard lock(mu_);
  return next_;
}

OneHotEmbedder::OneHotEmbedder(std::vector<std::string> vocabulary) {
  for (const std::string& word : vocabulary) {
    for (std::string& tok : Tokenize(word)) {
      if (index_.emplace(tok, vocabulary_.size()).second) {
        vocabulary_.push_back(std::move(tok));
      }
    }
  }
  if (vocabulary_.empty()) {
    throw Error(Errc::kInvalidArgument, "one-hot vocabulary is empty");
  }
}

EmbeddingVector OneHotEmbedder::one_hot(std::string_view token) const {
  EmbeddingVector v{std::vector<double>(vocabulary_.size(), 0.0)};
  if (auto it = index_.find(token); it != index_.end()) v.values[it->second] = 1.0;
  return v;
}

std::vector<TokenEmbedding> OneHotEmbedder::embed_tokens(std::string_view text) {
  std::vector<TokenEmbedding> out;
  for (std::string& tok : TokensOrThrow(text)) {
    EmbeddingVector v = one_hot(tok);
    out.push_back({std::move(tok), std::move(v)});
  }
  return out;
}

EmbeddingVector OneHotEmbedder::embed_sentence(std::string_view text) {
  EmbeddingVector sum{std::vector<double>(vocabulary_.size(), 0.0)};
  for (const std::string& tok : TokensOrThrow(text)) {
    if (auto it = index_.find(tok); it != index_.end()) sum.values[it->second] += 1.0;
  }
  Normalize(sum.values);
  return sum;
}

OneHotSentenceEmbedder::OneHotSentenceEmbedder(std::vector<std::string> sentences) {
  for (const std::string& s : sentences) {
    std::string key = NormalizeText(s);
    if (key.empty()) continue;
    sentence_index_.emplace(std::move(key), sentence_index_.size());
  }
  if (sentence_index_.empty()) {
    throw Error(Errc::kInvalidArgument, "sentence vocabulary is empty");
  }
  tokens_ = std::make_unique<OneHotEmbedder>(std::move(sentences));
}

std::vector<TokenEmbedding> OneHotSentenceEmbedder::embed_tokens(
    std::string_view text) {
  return tokens_->embed_tokens(text);
}

EmbeddingVector OneHotSentenceEmbedder::embed_sentence(std::string_view text) {
  const std::string key = NormalizeText(text);
  if (key.empty()) throw Error(Errc::kEmptyText, "text has no tokens");
  EmbeddingVector v{std::vector<double>(sentence_index_.size(), 0.0)};
  if (auto it = sentence_index_.find(key); it != sentence_index_.end()) {
    v.values[it->second] = 1.0;
  }
  return v;
}

HashEmbedder::HashEmbedder(std::size_t dim, std::uint64_t seed)
    : dim_(dim), seed_(seed) {
  if (dim_ == 0) throw Error(Errc::kInvalidArgument, "embedding dim must be > 0");
}

EmbeddingVector HashEmbedder::token_vector(std::string_view token) const {
  std::uint64_t state = SplitMix64(Fnv1a64(token) ^ SplitMix64(seed_));
  EmbeddingVector v{std::vector<double>(dim_)};
  for (double& x : v.values) {
    state = SplitMix64(state);
    // 53 high bits to a double in [-1, 1).
    x = static_cast<double>(state >> 11) * 0x1.0p-52 - 1.0;
  }
  Normalize(v.values);
  return v;
}

std::vector<TokenEmbedding> HashEmbedder::embed_tokens(std::string_view text) {
  std::vector<TokenEmbedding> out;
  for (std::string& tok : TokensOrThrow(text)) {
    EmbeddingVector v = token_vector(tok);
    out.push_back({std::move(tok), std::move(v)});
  }
  return out;
}

EmbeddingVector HashEmbedder::embed_sentence(std::string_view text) {
  EmbeddingVector sum{std::vector<double>(dim_, 0.0)};
  for (const std::string& tok : TokensOrThrow(text)) {
    EmbeddingVector v = token_vector(tok);
    for (std::size_t i = 0; i < dim_; ++i) sum.values[i] += v.values[i];
  }
  Normalize(sum.values);
  return sum;
}

std::chrono::milliseconds BackoffDelay(const RetryPolicy& policy, int attempt,
                                       std::uint64_t salt) {
  double ms = static_cast<double>(policy.base_delay.count()) *
              std::ldexp(1.0, std::max(0, attempt - 1));
  ms = std::min(ms, static_cast<double>(policy.max_delay.count()));
  const std::uint64_t h = SplitMix64(salt ^ static_cast<std::uint64_t>(attempt));
  const double u = static_cast<double>(h >> 11) * 0x1.0p-53;  // [0, 1)
  ms *= 1.0 - std::clamp(policy.jitter, 0.0, 1.0) * u;
  return std::chrono::milliseconds(static_cast<long long>(ms));
}

Gateway::Gateway(std::size_t max_in_flight, RetryPolicy retry)
    : max_in_flight_(std::max<std::size_t>(1, max_in_flight)),
      retry_(retry),
      sleeper_([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }) {
  if (retry_.max_attempts < 1) {
    throw Error(Errc::kInvalidArgument, "retry limit must be >= 1");
  }
}

void Gateway::register_text(std::string model_id,
                            std::shared_ptr<TextProvider> provider,
                            double requests_per_second) {
  auto limiter = std::make_shared<RateLimiter>();
  if (requests_per_second > 0) {
    limiter->interval = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
        std::chrono::duration<double>(1.0 / requests_per_second));
  }
  text_.insert_or_assign(std::move(model_id),
                         TextEntry{std::move(provider), std::move(limiter)});
}

void Gateway::register_embedding(std::string model_id,
                                 std::shared_ptr<EmbeddingProvider> provider) {
  embed_.insert_or_assign(std::move(model_id), std::move(provider));
}

bool Gateway::has_text(std::string_view model_id) const {
  return text_.find(model_id) != text_.end();
}

bool Gateway::has_embedding(std::string_view model_id) const {
  return embed_.find(model_id) != embed_.end();
}

void Gateway::acquire() {
  std::unique_lock lock(slots_mu_);
  slots_cv_.wait(lock, [&] { return in_flight_ < max_in_flight_; });
  ++in_flight_;
}

void Gateway::release() {
  {
    std::lock_guard lock(slots_mu_);
    --in_flight_;
  }
  slots_cv_.notify_one();
}

class Gateway::Slot {
 public:
  explicit Slot(Gateway& gw) : gw_(gw) { gw_.acquire(); }
  ~Slot() { gw_.release(); }
  Slot(const Slot&) = delete;
  Slot& operator=(const Slot&) = delete;

 private:
  Gateway& gw_;
};

void Gateway::pace(RateLimiter& limiter) {
  if (limiter.interval == std::chrono::steady_clock::duration::zero()) return;
  std::chrono::steady_clock::duration wait{};
  {
    std::lock_guard lock(limiter.mu);
    const auto now = std::chrono::steady_clock::now();
    const auto start = std::max(now, limiter.next);
    limiter.next = start + limiter.interval;
    wait = start - now;
  }
  if (wait > std::chrono::steady_clock::duration::zero()) {
    sleeper_(std::chrono::ceil<std::chrono::milliseconds>(wait));
  }
}

GenerationRecord Gateway::generate(const GenerationRequest& request) {
  request.validate();
  auto it = text_.find(request.model_id);
  if (it == text_.end()) {
    throw Error(Errc::kProviderUnavailable,
                "no provider configured for model " + request.model_id);
  }
  TextEntry& entry = it->second;
  const std::uint64_t salt =
      Fnv1a64(request.prompt.text, Fnv1a64(request.model_id));
  const auto started = std::chrono::steady_clock::now();

  for (int attempt = 1;; ++attempt) {
    std::optional<Error> failure;
    {
      Slot slot(*this);
      pace(*entry.limiter);
      try {
        std::string text = entry.provider->complete(request);
        if (Trim(text).empty()) {
          failure = Error(Errc::kEmptyCompletion, "provider returned no text");
        } else {
          GenerationRecord rec;
          rec.request = request;
          rec.output_text = std::move(text);
          rec.provider = entry.provider->name();
          rec.attempt_count = attempt;
          rec.latency = std::chrono::duration_cast<std::chrono::milliseconds>(
              std::chrono::steady_clock::now() - started);
          return rec;
        }
      } catch (const Error& e) {
        if (!IsTransient(e.code())) throw;
        failure = e;
      }
    }
    if (attempt >= retry_.max_attempts) {
      Error exhausted(failure->code(),
                      "model " + request.model_id + " failed after " +
                          std::to_string(attempt) + " attempt(s): " +
                          failure->what());
      if (failure->retry_after()) exhausted.with_retry_after(*failure->retry_after());
      throw exhausted;
    }
    auto delay = BackoffDelay(retry_, attempt, salt);
    if (failure->retry_after()) delay = std::max(delay, *failure->retry_after());
    sleeper_(delay);
  }
}

std::vector<Gateway::Outcome> Gateway::generate_all(
    std::span<const GenerationRequest> requests) {
  std::vector<Outcome> outcomes(requests.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < requests.size(); i = next++) {
      try {
        outcomes[i].record = generate(requests[i]);
      } catch (const Error& e) {
        outcomes[i].error = e;
      } catch (const std::exception& e) {
        outcomes[i].error = Error(Errc::kProviderUnavailable, e.what());
      }
    }
  };
  const std::size_t workers = std::min(max_in_flight_, requests.size());
  std::vector<std::jthread> threads;
  for (std::size_t w = 1; w < workers; ++w) threads.emplace_back(worker);
  worker();
  threads.clear();  // joins
  return outcomes;
}

EmbeddingProvider& Gateway::embedder(std::string_view model_id) const {
  auto it = embed_.find(model_id);
  if (it == embed_.end()) {
    throw Error(Errc::kProviderUnavailable,
                "no embedder configured for model " + std::string(model_id));
  }
  return *it->second;
}

std::vector<TokenEmbedding> Gateway::embed_tokens(std::string_view text,
                                                  std::string_view model_id) {
  if (Trim(text).empty()) throw Error(Errc::kEmptyText, "empty text");
  EmbeddingProvider& e = embedder(model_id);
  Slot slot(*this);
  return e.embed_tokens(text);
}

EmbeddingVector Gateway::embed_sentence(std::string_view text,
                                        std::string_view model_id) {
  if (Trim(text).empty()) throw Error(Errc::kEmptyText, "empty text");
  EmbeddingProvider& e = embedder(model_id);
  Slot slot(*this);
  return e.embed_sentence(text);
}

Json record_to_json(const GenerationRecord& record) {
  return Json{{"tweet_id", record.request.prompt.tweet_id},
              {"variant", promptkit::KindName(record.request.prompt.variant.kind)},
              {"template_id", record.request.prompt.variant.template_id},
              {"model_id", record.request.model_id},
              {"provider", record.provider},
              {"attempts", record.attempt_count},
              {"text", record.output_text}};
}

}  // namespace counterarg::modelgw
