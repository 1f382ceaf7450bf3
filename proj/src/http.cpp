// SPDX-License-Identifier: Apache-2.0
#include <ila/error.hpp>
#include <ila/http.hpp>

#include <httplib.h>

#include <regex>
#include <thread>

namespace ila::http
{

namespace
{

struct ParsedUrl
{
    std::string origin;  // scheme://host[:port]
    std::string path;
};

ParsedUrl parse_url(const std::string& url)
{
    static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(url, m, re))
        throw ConfigError("invalid endpoint URL: " + url);
    return {m[1].str(), m[2].matched ? m[2].str() : "/"};
}

} // namespace

nlohmann::json post_json(const Settings& settings, const nlohmann::json& body)
{
    auto url = parse_url(settings.url);
    httplib::Client client(url.origin);
    client.set_connection_timeout(settings.timeout);
    client.set_read_timeout(settings.timeout);
    client.set_write_timeout(settings.timeout);

    httplib::Headers headers;
    if (!settings.api_key.empty())
        headers.emplace("Authorization", "Bearer " + settings.api_key);

    const std::string payload = body.dump();
    std::string last_error;
    for (int attempt = 0; attempt <= settings.max_retries; ++attempt)
    {
        if (attempt > 0)
            std::this_thread::sleep_for(settings.backoff * (1 << (attempt - 1)));

        auto res = client.Post(url.path, headers, payload, "application/json");
        if (!res)
        {
            last_error = "request to " + url.origin + url.path + " failed: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 429 || res->status >= 500)
        {
            last_error = "endpoint returned HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200)
            throw TransportError("endpoint returned HTTP " + std::to_string(res->status) + ": " +
                                 res->body.substr(0, 500));
        try
        {
            return nlohmann::json::parse(res->body);
        }
        catch (const nlohmann::json::exception& e)
        {
            throw TransportError(std::string("endpoint returned malformed JSON: ") + e.what());
        }
    }
    throw TransportError(last_error + " (after " + std::to_string(settings.max_retries + 1) + " attempts)");
}

} // namespace ila::http
