// SPDX-License-Identifier: Apache-2.0
#include <ila/text.hpp>

#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>

namespace ila::text
{

namespace
{

/// Length of the valid UTF-8 sequence starting at s[i], or 0.
std::size_t sequence_length(std::string_view s, std::size_t i)
{
    auto c = static_cast<unsigned char>(s[i]);
    std::size_t len = 0;
    std::uint32_t cp = 0;
    if (c < 0x80)
        return 1;
    if ((c & 0xE0) == 0xC0)
    {
        len = 2;
        cp = c & 0x1F;
    }
    else if ((c & 0xF0) == 0xE0)
    {
        len = 3;
        cp = c & 0x0F;
    }
    else if ((c & 0xF8) == 0xF0)
    {
        len = 4;
        cp = c & 0x07;
    }
    else
        return 0;
    if (i + len > s.size())
        return 0;
    for (std::size_t k = 1; k < len; ++k)
    {
        auto cc = static_cast<unsigned char>(s[i + k]);
        if ((cc & 0xC0) != 0x80)
            return 0;
        cp = (cp << 6) | (cc & 0x3F);
    }
    // overlong forms, surrogates, out of range
    if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000) || cp > 0x10FFFF ||
        (cp >= 0xD800 && cp <= 0xDFFF))
        return 0;
    return len;
}

} // namespace

bool is_valid_utf8(std::string_view s)
{
    for (std::size_t i = 0; i < s.size();)
    {
        auto n = sequence_length(s, i);
        if (n == 0)
            return false;
        i += n;
    }
    return true;
}

std::string sanitize_utf8(std::string_view s)
{
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size();)
    {
        auto n = sequence_length(s, i);
        if (n == 0)
        {
            out += "\xEF\xBF\xBD";
            ++i;
            continue;
        }
        out.append(s.substr(i, n));
        i += n;
    }
    return out;
}

std::size_t char_count(std::string_view s)
{
    std::size_t n = 0;
    for (char c : s)
        if ((static_cast<unsigned char>(c) & 0xC0) != 0x80)
            ++n;
    return n;
}

std::size_t token_estimate(std::string_view s)
{
    return (char_count(s) + 3) / 4;
}

std::string truncate(std::string_view s, std::size_t max_chars)
{
    std::size_t seen = 0;
    for (std::size_t i = 0; i < s.size(); ++i)
    {
        if ((static_cast<unsigned char>(s[i]) & 0xC0) == 0x80)
            continue;
        if (seen == max_chars)
        {
            std::string out(s.substr(0, i));
            out += kTruncationMarker;
            return out;
        }
        ++seen;
    }
    return std::string(s);
}

std::string slugify(std::string_view heading)
{
    std::string out;
    bool pending_dash = false;
    for (char ch : heading)
    {
        auto c = static_cast<unsigned char>(ch);
        bool keep = c >= 0x80 || std::isalnum(c);
        if (!keep)
        {
            pending_dash = true;
            continue;
        }
        if (pending_dash && !out.empty())
            out += '-';
        pending_dash = false;
        out += c < 0x80 ? static_cast<char>(std::tolower(c)) : ch;
    }
    return out.empty() ? "section" : out;
}

std::string to_lower_ascii(std::string_view s)
{
    std::string out(s);
    for (char& c : out)
        if (static_cast<unsigned char>(c) < 0x80)
            c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::string trim(std::string_view s)
{
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos)
        return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::string rtrim(std::string_view s)
{
    auto e = s.find_last_not_of(" \t\r\n");
    if (e == std::string_view::npos)
        return {};
    return std::string(s.substr(0, e + 1));
}

std::vector<std::string> split_lines(std::string_view s)
{
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start <= s.size())
    {
        auto nl = s.find('\n', start);
        if (nl == std::string_view::npos)
        {
            if (start < s.size())
                lines.emplace_back(s.substr(start));
            break;
        }
        std::string_view line = s.substr(start, nl - start);
        if (!line.empty() && line.back() == '\r')
            line.remove_suffix(1);
        lines.emplace_back(line);
        start = nl + 1;
    }
    return lines;
}

std::optional<std::string> last_fenced_block(std::string_view s)
{
    std::optional<std::string> found;
    bool inside = false;
    std::string current;
    for (const auto& line : split_lines(s))
    {
        auto t = trim(line);
        if (t.rfind("```", 0) == 0)
        {
            if (inside)
            {
                found = current;
                inside = false;
            }
            else
            {
                inside = true;
                current.clear();
            }
            continue;
        }
        if (inside)
            current += line + "\n";
    }
    return found;
}

long long percent_hundredths(long long num, long long den)
{
    // floor(10000 * num / den + 1/2) == floor((20000 * num + den) / (2 * den))
    return (20000 * num + den) / (2 * den);
}

std::string format_hundredths(long long hundredths)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%lld.%02lld", hundredths / 100, hundredths % 100);
    return buf;
}

std::string format_score(double score)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", score);
    std::string out = buf;
    if (out == "-0.0000")
        out = "0.0000";
    return out;
}

} // namespace ila::text
