// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <nlohmann/json.hpp>

#include <chrono>
#include <string>

namespace ila::http
{

struct Settings
{
    /// Full URL of the endpoint, e.g. "http://localhost:8080/v1/embeddings".
    std::string url;
    /// Sent as "Authorization: Bearer <key>" when non-empty. Never logged.
    std::string api_key;
    int max_retries = 3;
    std::chrono::milliseconds backoff{250};
    std::chrono::seconds timeout{120};
};

/// POSTs `body` as JSON and parses the JSON reply. Connection failures,
/// HTTP 429 and 5xx are retried up to `max_retries` times with exponential
/// backoff; anything else, or exhausting the retries, throws TransportError.
nlohmann::json post_json(const Settings& settings, const nlohmann::json& body);

} // namespace ila::http
