// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <ila/observation.hpp>

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace ila
{

enum class ToolName
{
    ViewStruct,
    ViewDetail,
    SemSearch,
    TypeLookup,
    Execute,
    Submit,
};

inline constexpr ToolName kAllTools[] = {ToolName::ViewStruct, ToolName::ViewDetail, ToolName::SemSearch,
                                         ToolName::TypeLookup, ToolName::Execute,    ToolName::Submit};

/// Label used for malformed model output in logs and analytics.
inline constexpr std::string_view kInvalidLabel = "invalid";

std::string_view to_string(ToolName tool);
std::optional<ToolName> tool_from_string(std::string_view name);

struct ViewStructArgs
{
    std::optional<std::string> section_id;
    int depth = 2;

    bool operator==(const ViewStructArgs&) const = default;
};

struct ViewDetailArgs
{
    std::string section_id;

    bool operator==(const ViewDetailArgs&) const = default;
};

struct SemSearchArgs
{
    std::vector<std::string> queries;

    bool operator==(const SemSearchArgs&) const = default;
};

struct TypeLookupArgs
{
    std::string name;

    bool operator==(const TypeLookupArgs&) const = default;
};

struct ExecuteArgs
{
    std::string code;
    std::string stdin_text;

    bool operator==(const ExecuteArgs&) const = default;
};

struct SubmitArgs
{
    std::string solution;

    bool operator==(const SubmitArgs&) const = default;
};

/// Model output that did not amount to exactly one well-formed tool call.
struct InvalidArgs
{
    std::string reason;
    std::string raw_text;

    bool operator==(const InvalidArgs&) const = default;
};

using ActionArgs =
    std::variant<ViewStructArgs, ViewDetailArgs, SemSearchArgs, TypeLookupArgs, ExecuteArgs, SubmitArgs, InvalidArgs>;

struct Action
{
    ActionArgs args;
    int turn_index = 0;

    bool is_invalid() const { return std::holds_alternative<InvalidArgs>(args); }
    std::optional<ToolName> tool() const;
    /// Tool name, or "invalid".
    std::string label() const;
    nlohmann::json arguments_json() const;

    static Action invalid(std::string reason, std::string raw_text = {});

    bool operator==(const Action&) const = default;
};

/// Builds a validated action from a tool name and its JSON arguments.
/// Anything that does not fit the tool's schema, or a tool outside
/// `offered`, becomes an InvalidAction explaining why.
Action make_action(std::string_view tool_name,
                   const nlohmann::json& arguments,
                   const std::vector<ToolName>& offered,
                   std::string raw_text = {});

/// Inverse of label()/arguments_json(), used when replaying logs. Invalid
/// actions round-trip unchanged; tool actions are re-validated.
Action action_from_log(std::string_view label, const nlohmann::json& arguments);

struct Observation
{
    ObservationKind kind = ObservationKind::ToolResult;
    std::string produced_by;
    std::string text;

    bool operator==(const Observation&) const = default;
};

struct Step
{
    Action action;
    Observation observation;

    bool operator==(const Step&) const = default;
};

/// The query plus the ordered action-observation history. Grows by exactly
/// one step per turn.
class AgentState
{
public:
    explicit AgentState(std::string query): query_(std::move(query)) {}

    const std::string& query() const { return query_; }
    const std::vector<Step>& history() const { return history_; }
    int turn() const { return static_cast<int>(history_.size()); }

    void append(Step step) { history_.push_back(std::move(step)); }

private:
    std::string query_;
    std::vector<Step> history_;
};

} // namespace ila
