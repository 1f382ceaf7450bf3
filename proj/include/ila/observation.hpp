// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>

namespace ila
{

enum class ObservationKind
{
    ToolResult,
    Miss,
    Error,
};

std::string_view to_string(ObservationKind kind);
ObservationKind observation_kind_from_string(std::string_view s);

/// What a primitive hands back to the agent. Misses and errors are feedback,
/// never exceptions.
struct ToolOutput
{
    ObservationKind kind = ObservationKind::ToolResult;
    std::string text;

    static ToolOutput result(std::string text) { return {ObservationKind::ToolResult, std::move(text)}; }
    static ToolOutput miss(std::string text) { return {ObservationKind::Miss, std::move(text)}; }
    static ToolOutput error(std::string text) { return {ObservationKind::Error, std::move(text)}; }

    bool operator==(const ToolOutput&) const = default;
};

} // namespace ila
