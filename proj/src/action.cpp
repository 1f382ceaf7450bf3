// SPDX-License-Identifier: Apache-2.0
#include <ila/action.hpp>
#include <ila/retrieval.hpp>

#include <algorithm>

namespace ila
{

std::string_view to_string(ToolName tool)
{
    switch (tool)
    {
    case ToolName::ViewStruct: return "ViewStruct";
    case ToolName::ViewDetail: return "ViewDetail";
    case ToolName::SemSearch: return "SemSearch";
    case ToolName::TypeLookup: return "TypeLookup";
    case ToolName::Execute: return "Execute";
    case ToolName::Submit: return "Submit";
    }
    return "?";
}

std::optional<ToolName> tool_from_string(std::string_view name)
{
    for (auto t : kAllTools)
        if (to_string(t) == name)
            return t;
    return std::nullopt;
}

std::optional<ToolName> Action::tool() const
{
    if (is_invalid())
        return std::nullopt;
    return static_cast<ToolName>(args.index());
}

std::string Action::label() const
{
    auto t = tool();
    return std::string(t ? to_string(*t) : kInvalidLabel);
}

nlohmann::json Action::arguments_json() const
{
    return std::visit(
        [](const auto& a) -> nlohmann::json {
            using T = std::decay_t<decltype(a)>;
            if constexpr (std::is_same_v<T, ViewStructArgs>)
            {
                nlohmann::json j = {{"depth", a.depth}};
                if (a.section_id)
                    j["section_id"] = *a.section_id;
                return j;
            }
            else if constexpr (std::is_same_v<T, ViewDetailArgs>)
                return {{"section_id", a.section_id}};
            else if constexpr (std::is_same_v<T, SemSearchArgs>)
                return {{"queries", a.queries}};
            else if constexpr (std::is_same_v<T, TypeLookupArgs>)
                return {{"name", a.name}};
            else if constexpr (std::is_same_v<T, ExecuteArgs>)
            {
                nlohmann::json j = {{"code", a.code}};
                if (!a.stdin_text.empty())
                    j["stdin"] = a.stdin_text;
                return j;
            }
            else if constexpr (std::is_same_v<T, SubmitArgs>)
                return {{"solution", a.solution}};
            else
                return {{"reason", a.reason}, {"raw_text", a.raw_text}};
        },
        args);
}

Action Action::invalid(std::string reason, std::string raw_text)
{
    return Action{InvalidArgs{std::move(reason), std::move(raw_text)}, 0};
}

namespace
{

struct SchemaError
{
    std::string message;
};

const nlohmann::json* field(const nlohmann::json& args, const char* name)
{
    auto it = args.find(name);
    return it == args.end() || it->is_null() ? nullptr : &*it;
}

std::string required_string(const nlohmann::json& args, const char* name)
{
    const auto* v = field(args, name);
    if (!v)
        throw SchemaError{std::string("missing required argument '") + name + "'"};
    if (!v->is_string())
        throw SchemaError{std::string("argument '") + name + "' must be a string"};
    return v->get<std::string>();
}

ActionArgs parse_args(ToolName tool, const nlohmann::json& a)
{
    switch (tool)
    {
    case ToolName::ViewStruct:
    {
        ViewStructArgs out;
        if (const auto* s = field(a, "section_id"))
        {
            if (!s->is_string())
                throw SchemaError{"argument 'section_id' must be a string"};
            if (!s->get<std::string>().empty())
                out.section_id = s->get<std::string>();
        }
        if (const auto* d = field(a, "depth"))
        {
            if (!d->is_number_integer())
                throw SchemaError{"argument 'depth' must be an integer"};
            auto depth = d->get<long long>();
            if (depth < 1 || depth > 64)
                throw SchemaError{"argument 'depth' must be between 1 and 64"};
            out.depth = static_cast<int>(depth);
        }
        return out;
    }
    case ToolName::ViewDetail: return ViewDetailArgs{required_string(a, "section_id")};
    case ToolName::SemSearch:
    {
        const auto* q = field(a, "queries");
        if (!q)
            throw SchemaError{"missing required argument 'queries'"};
        if (q->is_string())
            throw SchemaError{"argument 'queries' must be an array of strings"};
        if (!q->is_array())
            throw SchemaError{"argument 'queries' must be an array of strings"};
        SemSearchArgs out;
        for (const auto& item : *q)
        {
            if (!item.is_string())
                throw SchemaError{"argument 'queries' must be an array of strings"};
            out.queries.push_back(item.get<std::string>());
        }
        if (out.queries.empty())
            throw SchemaError{"SemSearch needs at least one query"};
        if (out.queries.size() > kMaxQueriesPerSearch)
            throw SchemaError{"SemSearch accepts at most " + std::to_string(kMaxQueriesPerSearch) + " queries, got " +
                              std::to_string(out.queries.size())};
        return out;
    }
    case ToolName::TypeLookup: return TypeLookupArgs{required_string(a, "name")};
    case ToolName::Execute:
    {
        ExecuteArgs out{required_string(a, "code"), {}};
        if (const auto* s = field(a, "stdin"))
        {
            if (!s->is_string())
                throw SchemaError{"argument 'stdin' must be a string"};
            out.stdin_text = s->get<std::string>();
        }
        return out;
    }
    case ToolName::Submit: return SubmitArgs{required_string(a, "solution")};
    }
    throw SchemaError{"unsupported tool"};
}

} // namespace

Action make_action(std::string_view tool_name,
                   const nlohmann::json& arguments,
                   const std::vector<ToolName>& offered,
                   std::string raw_text)
{
    auto tool = tool_from_string(tool_name);
    if (!tool || std::find(offered.begin(), offered.end(), *tool) == offered.end())
        return Action::invalid("unknown tool " + std::string(tool_name), std::move(raw_text));
    if (!arguments.is_object())
        return Action::invalid("arguments for " + std::string(tool_name) + " must be a JSON object",
                               std::move(raw_text));
    try
    {
        return Action{parse_args(*tool, arguments), 0};
    }
    catch (const SchemaError& e)
    {
        return Action::invalid("invalid arguments for " + std::string(tool_name) + ": " + e.message,
                               std::move(raw_text));
    }
}

Action action_from_log(std::string_view label, const nlohmann::json& arguments)
{
    if (label == kInvalidLabel)
        return Action::invalid(arguments.value("reason", ""), arguments.value("raw_text", ""));
    std::vector<ToolName> all(std::begin(kAllTools), std::end(kAllTools));
    return make_action(label, arguments, all);
}

} // namespace ila
