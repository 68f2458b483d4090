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

#ifndef COUNTERARG_TOKENIZE_HPP_
#define COUNTERARG_TOKENIZE_HPP_

#include <string>
#include <string_view>
#include <vector>

namespace counterarg {

// The fixed tokenization rule shared by ROUGE and the toy embedders.
//
// Tokens are maximal runs of word bytes: ASCII letters and digits, plus any
// byte >= 0x80 so UTF-8 sequences stay intact. ASCII letters are lower-cased.
// Whitespace and ASCII punctuation separate tokens and are dropped.
std::vector<std::string> Tokenize(std::string_view text);

// Tokens joined by a single space. "x" and " X. " normalize identically.
std::string NormalizeText(std::string_view text);

}  // namespace counterarg

#endif  // COUNTERARG_TOKENIZE_HPP_
