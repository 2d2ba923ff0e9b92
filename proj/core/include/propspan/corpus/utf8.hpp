#pragma once

#include <string>
#include <string_view>

namespace propspan::corpus::utf8 {

/// Decodes UTF-8 into scalar values. Throws FormatError on malformed input;
/// `what` names the source in the message.
std::u32string decode(std::string_view bytes, std::string_view what = "input");

std::string encode(std::u32string_view text);

/// Unicode White_Space property.
bool is_space(char32_t c);

/// Letters and digits. ASCII is classified exactly; outside ASCII, code points
/// in the punctuation, symbol and space blocks are rejected and the rest accepted.
bool is_alnum(char32_t c);

}  // namespace propspan::corpus::utf8
