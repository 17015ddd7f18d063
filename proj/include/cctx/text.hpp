#pragma once

#include <string>
#include <string_view>

namespace cctx {

// Unicode White_Space code points (word separators and line padding).
bool is_space(char32_t c);

// Strict UTF-8 decode; rejects overlong forms, surrogates and > U+10FFFF.
// Returns false on the first invalid byte; `out` then holds the prefix.
bool utf8_decode(std::string_view in, std::u32string& out);

std::string utf8_encode(char32_t c);
std::string utf8_encode(const std::u32string& s);

}  // namespace cctx
