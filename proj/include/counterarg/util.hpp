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

// Small shared helpers: stable hashing, portable seeded draws, JSONL I/O.

#ifndef COUNTERARG_UTIL_HPP_
#define COUNTERARG_UTIL_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace counterarg {

using Json = nlohmann::json;

// 64-bit FNV-1a. Stable across platforms and runs, unlike std::hash.
constexpr std::uint64_t Fnv1a64(std::string_view bytes,
                                std::uint64_t seed = 0xcbf29ce484222325ULL) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t MixSeed(std::uint64_t seed, std::string_view salt) {
  return SplitMix64(seed ^ Fnv1a64(salt));
}

// std::mt19937_64's output sequence is fixed by the standard, but the
// standard distributions are not; these draws are portable.
using Rng = std::mt19937_64;

// Uniform integer in [0, bound) by rejection sampling. bound must be > 0.
std::uint64_t UniformBelow(Rng& rng, std::uint64_t bound);

template <typename T>
void Shuffle(std::vector<T>& items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::size_t j = UniformBelow(rng, i);
    std::swap(items[i - 1], items[j]);
  }
}

std::string Trim(std::string_view text);

// Lower-cases the first character when it is ASCII.
std::string LowerFirst(std::string_view text);

std::string Join(std::span<const std::string> parts, std::string_view sep);

std::vector<std::string> SplitCommaList(std::string_view text);

// Line-delimited JSON. Readers report 1-based line numbers in errors and skip
// blank lines.
std::vector<Json> ReadJsonl(const std::filesystem::path& path);
void ForEachJsonlLine(
    std::istream& in,
    const std::function<void(std::size_t line, const Json& record)>& fn);
void WriteJsonl(const std::filesystem::path& path, std::span<const Json> rows);
void WriteText(const std::filesystem::path& path, std::string_view text);
std::string ReadText(const std::filesystem::path& path);

// Hex-encoded SHA-256.
std::string Sha256Hex(std::string_view bytes);

}  // namespace counterarg

#endif  // COUNTERARG_UTIL_HPP_
