// SPDX-License-Identifier: Apache-2.0
#include <ila/agent.hpp>
#include <ila/error.hpp>
#include <ila/text.hpp>

#include <algorithm>
#include <chrono>

namespace ila
{

void AgentConfig::validate() const
{
    if (max_turns < 1)
        throw ConfigError("max_turns must be at least 1");
    if (max_observation_chars == 0)
        throw ConfigError("max_observation_chars must be positive");
    if (k == 0)
        throw ConfigError("k must be positive");
}

std::string_view to_string(TerminalReason reason)
{
    switch (reason)
    {
    case TerminalReason::SubmitPass: return "submit-pass";
    case TerminalReason::BudgetExhausted: return "budget-exhausted";
    case TerminalReason::ProviderError: return "provider-error";
    }
    return "?";
}

std::optional<TerminalReason> terminal_reason_from_string(std::string_view s)
{
    for (auto r : {TerminalReason::SubmitPass, TerminalReason::BudgetExhausted, TerminalReason::ProviderError})
        if (to_string(r) == s)
            return r;
    return std::nullopt;
}

// ---------------------------------------------------------------- serialization

nlohmann::json Trajectory::to_json() const
{
    nlohmann::json steps_json = nlohmann::json::array();
    for (const auto& s : steps)
        steps_json.push_back({{"turn", s.action.turn_index},
                              {"tool", s.action.label()},
                              {"arguments", s.action.arguments_json()},
                              {"observation",
                               {{"kind", to_string(s.observation.kind)},
                                {"produced_by", s.observation.produced_by},
                                {"text", s.observation.text}}}});
    nlohmann::json j = {{"schema_version", kTrajectorySchemaVersion},
                        {"mode", "ila-agent"},
                        {"problem_id", problem_id},
                        {"task_kind", task_kind},
                        {"max_turns", max_turns},
                        {"steps", std::move(steps_json)},
                        {"terminal_reason", to_string(terminal_reason)},
                        {"final_solution", final_solution}};
    if (!error.empty())
        j["error"] = error;
    if (accepted)
        j["accepted"] = *accepted;
    if (compiled)
        j["compiled"] = *compiled;
    return j;
}

Trajectory Trajectory::from_json(const nlohmann::json& j)
{
    try
    {
        if (j.at("schema_version").get<int>() != kTrajectorySchemaVersion)
            throw LoadError("unsupported trajectory schema version " + j.at("schema_version").dump());
        Trajectory t;
        t.problem_id = j.at("problem_id").get<std::string>();
        t.task_kind = j.value("task_kind", "");
        t.max_turns = j.at("max_turns").get<int>();
        for (const auto& s : j.at("steps"))
        {
            Step step;
            step.action = action_from_log(s.at("tool").get<std::string>(), s.at("arguments"));
            step.action.turn_index = s.at("turn").get<int>();
            const auto& o = s.at("observation");
            step.observation = {observation_kind_from_string(o.at("kind").get<std::string>()),
                                o.at("produced_by").get<std::string>(), o.at("text").get<std::string>()};
            t.steps.push_back(std::move(step));
        }
        auto reason = terminal_reason_from_string(j.at("terminal_reason").get<std::string>());
        if (!reason)
            throw LoadError("unknown terminal_reason " + j.at("terminal_reason").dump());
        t.terminal_reason = *reason;
        t.final_solution = j.at("final_solution").get<std::string>();
        t.error = j.value("error", "");
        if (j.contains("accepted"))
            t.accepted = j["accepted"].get<bool>();
        if (j.contains("compiled"))
            t.compiled = j["compiled"].get<bool>();
        return t;
    }
    catch (const nlohmann::json::exception& e)
    {
        throw LoadError(std::string("malformed trajectory: ") + e.what());
    }
    catch (const std::invalid_argument& e)
    {
        throw LoadError(std::string("malformed trajectory: ") + e.what());
    }
}

// ---------------------------------------------------------------- dispatch

std::vector<ToolSpec> tools_for(const Resources& resources)
{
    return tool_specs(resources.types != nullptr);
}

namespace
{

struct Dispatched
{
    Observation observation;
    bool submit_passed = false;
};

std::string format_exec(const std::vector<ExecResult>& phases)
{
    std::string out;
    for (const auto& p : phases)
    {
        out += "[" + std::string(to_string(p.phase)) + "] exit " + p.exit_label() + "\n";
        out += "stdout:\n" + (p.stdout_text.empty() ? std::string("(empty)\n") : p.stdout_text);
        if (!out.empty() && out.back() != '\n')
            out += '\n';
        out += "stderr:\n" + (p.stderr_text.empty() ? std::string("(empty)\n") : p.stderr_text);
        if (!out.empty() && out.back() != '\n')
            out += '\n';
    }
    return out;
}

std::string format_submit(const SubmitResult& r)
{
    std::string out = "compiled: " + std::string(r.compiled ? "yes" : "no") + "\n";
    out += "public tests passed: " + std::to_string(r.passed_count()) + "/" + std::to_string(r.tests.size()) + "\n";
    if (r.all_passed)
    {
        out += "All public tests passed. Submission accepted for grading.\n";
        return out;
    }
    for (const auto& t : r.tests)
    {
        if (t.passed)
            out += "PASS " + t.test_id + "\n";
        else
        {
            out += "FAIL " + t.test_id + (t.feedback.empty() ? "" : ": " + t.feedback);
            if (out.back() != '\n')
                out += '\n';
        }
    }
    return out;
}

ToolOutput search(const SemSearchArgs& a, const Resources& res, const AgentConfig& config)
{
    if (!res.index || !res.embedder)
        return ToolOutput::error("SemSearch is unavailable: no documentation index is loaded");
    auto r = sem_search(*res.index, *res.embedder, a.queries, config.k);
    if (r.status == SearchResult::Status::Rejected)
        return ToolOutput::error(r.note);
    if (r.status == SearchResult::Status::EmptyIndex)
        return ToolOutput::miss(r.note);

    std::string out;
    for (std::size_t q = 0; q < a.queries.size(); ++q)
    {
        out += "Results for \"" + a.queries[q] + "\":\n";
        for (std::size_t i = 0; i < r.per_query[q].size(); ++i)
        {
            const auto& hit = r.per_query[q][i];
            out += "  " + std::to_string(i + 1) + ". [" + hit.chunk_id + "] score " + text::format_score(hit.score) +
                   "\n";
        }
    }
    for (const auto& hit : r.merged)
    {
        const DocChunk* chunk = res.docs ? res.docs->chunk(hit.chunk_id) : nullptr;
        const DocNode* node = chunk && res.docs ? res.docs->find(chunk->section_id) : nullptr;
        out += "\n--- [" + (chunk ? chunk->section_id : hit.chunk_id) + "]";
        if (node)
            out += " " + node->title;
        out += "\n";
        if (chunk)
        {
            out += chunk->text;
            if (out.back() != '\n')
                out += '\n';
        }
    }
    return ToolOutput::result(std::move(out));
}

std::string tool_list(const Resources& res)
{
    std::string out;
    for (const auto& t : tools_for(res))
        out += (out.empty() ? "" : ", ") + std::string(to_string(t.name));
    return out;
}

Dispatched dispatch_impl(const Action& action, const Resources& res, const Task& task, const AgentConfig& config)
{
    Dispatched d;
    ToolOutput out = std::visit(
        [&](const auto& a) -> ToolOutput {
            using T = std::decay_t<decltype(a)>;
            if constexpr (std::is_same_v<T, InvalidArgs>)
                return ToolOutput::error("Invalid action: " + a.reason +
                                         ". Reply with exactly one call to one of: " + tool_list(res) + ".");
            else if constexpr (std::is_same_v<T, ViewStructArgs>)
            {
                if (!res.docs)
                    return ToolOutput::error("ViewStruct is unavailable: no documentation is loaded");
                return res.docs->view_struct(a.section_id ? std::optional<std::string_view>(*a.section_id)
                                                          : std::nullopt,
                                             a.depth);
            }
            else if constexpr (std::is_same_v<T, ViewDetailArgs>)
            {
                if (!res.docs)
                    return ToolOutput::error("ViewDetail is unavailable: no documentation is loaded");
                return res.docs->view_detail(a.section_id);
            }
            else if constexpr (std::is_same_v<T, SemSearchArgs>)
                return search(a, res, config);
            else if constexpr (std::is_same_v<T, TypeLookupArgs>)
            {
                if (!res.types || !res.docs)
                    return ToolOutput::error("Invalid action: unknown tool TypeLookup");
                return res.types->lookup(*res.docs, a.name);
            }
            else if constexpr (std::is_same_v<T, ExecuteArgs>)
            {
                if (!res.sandbox)
                    return ToolOutput::error("Execute is unavailable: no sandbox is configured");
                if (text::trim(a.code).empty())
                    return ToolOutput::error("Execute needs a non-empty program");
                auto phases = res.sandbox->execute(a.code, a.stdin_text);
                bool spawn_failed = !phases.empty() && phases.back().outcome == ExecResult::Outcome::SpawnFailure;
                auto text = format_exec(phases);
                return spawn_failed ? ToolOutput::error(std::move(text)) : ToolOutput::result(std::move(text));
            }
            else
            {
                if (!res.sandbox)
                    return ToolOutput::error("Submit is unavailable: no sandbox is configured");
                auto r = res.sandbox->submit(a.solution, task.public_tests);
                d.submit_passed = r.all_passed;
                auto text = format_submit(r);
                return r.infrastructure_error ? ToolOutput::error(std::move(text)) : ToolOutput::result(std::move(text));
            }
        },
        action.args);

    d.observation = {out.kind, action.label(), text::truncate(text::sanitize_utf8(out.text), config.max_observation_chars)};
    return d;
}

long long elapsed_ms(std::chrono::steady_clock::time_point start)
{
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
}

} // namespace

Observation dispatch(const Action& action, const Resources& resources, const Task& task, const AgentConfig& config)
{
    return dispatch_impl(action, resources, task, config).observation;
}

std::string final_solution_of(const std::vector<Step>& steps)
{
    for (auto it = steps.rbegin(); it != steps.rend(); ++it)
        if (const auto* s = std::get_if<SubmitArgs>(&it->action.args))
            return s->solution;
    for (auto it = steps.rbegin(); it != steps.rend(); ++it)
        if (const auto* inv = std::get_if<InvalidArgs>(&it->action.args))
            return text::last_fenced_block(inv->raw_text).value_or("");
    return {};
}

Trajectory run_trajectory(const Task& task, const Resources& resources, Policy& policy, const AgentConfig& config)
{
    config.validate();
    if (task.public_tests.empty())
        throw ConfigError("problem " + task.problem_id + " has no public tests");
    auto start = std::chrono::steady_clock::now();

    Trajectory t;
    t.problem_id = task.problem_id;
    t.task_kind = task.task_kind;
    t.max_turns = config.max_turns;
    t.terminal_reason = TerminalReason::BudgetExhausted;

    const auto tools = tools_for(resources);
    const auto offered = tool_names(tools);
    AgentState state(task.query);
    while (state.turn() < config.max_turns)
    {
        Action action;
        try
        {
            action = policy.decide(state, tools);
        }
        catch (const TransportError& e)
        {
            t.terminal_reason = TerminalReason::ProviderError;
            t.error = e.what();
            break;
        }
        catch (const ContextOverflow& e)
        {
            t.terminal_reason = TerminalReason::ProviderError;
            t.error = e.what();
            break;
        }
        if (auto tool = action.tool(); tool && std::find(offered.begin(), offered.end(), *tool) == offered.end())
            action = Action::invalid("unknown tool " + action.label(), action.arguments_json().dump());
        action.turn_index = state.turn();

        auto d = dispatch_impl(action, resources, task, config);
        state.append({action, d.observation});
        if (d.submit_passed)
        {
            t.terminal_reason = TerminalReason::SubmitPass;
            break;
        }
    }

    t.steps = state.history();
    t.final_solution = t.terminal_reason == TerminalReason::ProviderError ? std::string() : final_solution_of(t.steps);
    t.wall_time_ms = elapsed_ms(start);
    return t;
}

ReplayResult replay(const Trajectory& logged, const Task& task, const Resources& resources, const AgentConfig& config)
{
    auto start = std::chrono::steady_clock::now();
    ReplayResult r;
    auto& t = r.replayed;
    t.problem_id = logged.problem_id;
    t.task_kind = logged.task_kind;
    t.max_turns = logged.max_turns;
    t.terminal_reason = TerminalReason::BudgetExhausted;

    for (const auto& step : logged.steps)
    {
        auto d = dispatch_impl(step.action, resources, task, config);
        if (d.observation != step.observation)
            r.mismatched_turns.push_back(step.action.turn_index);
        t.steps.push_back({step.action, d.observation});
        if (d.submit_passed)
        {
            t.terminal_reason = TerminalReason::SubmitPass;
            break;
        }
    }
    if (t.terminal_reason != TerminalReason::SubmitPass && logged.terminal_reason == TerminalReason::ProviderError)
    {
        t.terminal_reason = TerminalReason::ProviderError;
        t.error = logged.error;
    }
    t.final_solution = t.terminal_reason == TerminalReason::ProviderError ? std::string() : final_solution_of(t.steps);
    t.wall_time_ms = elapsed_ms(start);
    return r;
}

} // namespace ila
