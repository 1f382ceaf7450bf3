// SPDX-License-Identifier: Apache-2.0
#include <ila/error.hpp>
#include <ila/observation.hpp>

namespace ila
{

std::string_view to_string(ObservationKind kind)
{
    switch (kind)
    {
    case ObservationKind::ToolResult: return "tool-result";
    case ObservationKind::Miss: return "miss";
    case ObservationKind::Error: return "error";
    }
    return "error";
}

ObservationKind observation_kind_from_string(std::string_view s)
{
    if (s == "tool-result")
        return ObservationKind::ToolResult;
    if (s == "miss")
        return ObservationKind::Miss;
    if (s == "error")
        return ObservationKind::Error;
    throw LoadError("unknown observation kind: " + std::string(s));
}

} // namespace ila
