// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ila::text
{

/// Appended whenever output is cut to a character cap.
inline constexpr std::string_view kTruncationMarker = "\n[... output truncated]";

bool is_valid_utf8(std::string_view s);

/// Replaces every byte that is not part of a valid UTF-8 sequence with U+FFFD.
std::string sanitize_utf8(std::string_view s);

/// Number of Unicode code points (assumes valid UTF-8).
std::size_t char_count(std::string_view s);

/// Approximate token count: characters / 4, rounded up.
std::size_t token_estimate(std::string_view s);

/// Cuts `s` to at most `max_chars` code points and appends kTruncationMarker
/// when anything was removed. Never splits a code point.
std::string truncate(std::string_view s, std::size_t max_chars);

/// Lowercase ASCII slug: alphanumerics kept, every other run of ASCII
/// characters collapsed into a single '-'. Non-ASCII bytes pass through.
std::string slugify(std::string_view heading);

std::string to_lower_ascii(std::string_view s);
std::string trim(std::string_view s);
std::string rtrim(std::string_view s);
std::vector<std::string> split_lines(std::string_view s);

/// Body of the last ``` fenced block in `s`, if any.
std::optional<std::string> last_fenced_block(std::string_view s);

/// Round-half-up to two decimals, computed exactly as 100 * num / den.
/// Returns hundredths of a percent, e.g. 2/3 -> 6667.
long long percent_hundredths(long long num, long long den);
std::string format_hundredths(long long hundredths);

/// Fixed four-decimal rendering used for retrieval scores.
std::string format_score(double score);

} // namespace ila::text
