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

#include "counterarg/util.hpp"

#include <openssl/evp.h>

#include <cctype>
#include <fstream>
#include <sstream>

#include "counterarg/error.hpp"

namespace counterarg {

std::uint64_t UniformBelow(Rng& rng, std::uint64_t bound) {
  if (bound == 0) throw Error(Errc::kInvalidArgument, "UniformBelow(0)");
  // Largest multiple of bound that fits; draws at or above it are rejected.
  const std::uint64_t limit = -bound % bound;
  for (;;) {
    std::uint64_t x = rng();
    if (x >= limit) return x % bound;
  }
}

std::string Trim(std::string_view text) {
  std::size_t b = 0;
  std::size_t e = text.size();
  while (b < e && std::isspace(static_cast<unsigned char>(text[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(text[e - 1]))) --e;
  return std::string(text.substr(b, e - b));
}

std::string LowerFirst(std::string_view text) {
  std::string out(text);
  if (!out.empty() && static_cast<unsigned char>(out[0]) < 0x80) {
    out[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(out[0])));
  }
  return out;
}

std::string Join(std::span<const std::string> parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out += sep;
    out += parts[i];
  }
  return out;
}

std::vector<std::string> SplitCommaList(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t comma = text.find(',', start);
    if (comma == std::string_view::npos) comma = text.size();
    std::string piece = Trim(text.substr(start, comma - start));
    if (!piece.empty()) out.push_back(std::move(piece));
    start = comma + 1;
  }
  return out;
}

void ForEachJsonlLine(
    std::istream& in,
    const std::function<void(std::size_t line, const Json& record)>& fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    Json record;
    try {
      record = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw Error(Errc::kMalformedRecord,
                  "line " + std::to_string(line_no) + ": " + e.what())
          .with_line(line_no);
    }
    fn(line_no, record);
  }
}

std::vector<Json> ReadJsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kMissingFile, path.string());
  std::vector<Json> rows;
  ForEachJsonlLine(in, [&](std::size_t, const Json& r) { rows.push_back(r); });
  return rows;
}

void WriteJsonl(const std::filesystem::path& path, std::span<const Json> rows) {
  std::string text;
  for (const Json& row : rows) {
    text += row.dump();
    text += '\n';
  }
  WriteText(path, text);
}

void WriteText(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::kIoFailure, "cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(Errc::kIoFailure, "short write to " + path.string());
}

std::string ReadText(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kMissingFile, path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string Sha256Hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(),
                 nullptr) != 1) {
    throw Error(Errc::kIoFailure, "sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xf];
  }
  return out;
}

}  // namespace counterarg
