// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <ila/action.hpp>
#include <ila/docstore.hpp>
#include <ila/policy.hpp>
#include <ila/retrieval.hpp>
#include <ila/sandbox.hpp>
#include <ila/typeindex.hpp>

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ila
{

inline constexpr int kTrajectorySchemaVersion = 1;

struct AgentConfig
{
    int max_turns = 15;
    /// Cap on every observation's text; longer text is cut and marked.
    std::size_t max_observation_chars = 8000;
    /// Chunks returned per SemSearch query.
    std::size_t k = kDefaultTopK;

    void validate() const;
};

/// Read-only resources the primitives operate on. `types` is optional and
/// controls whether TypeLookup is offered.
struct Resources
{
    const DocStore* docs = nullptr;
    const VectorIndex* index = nullptr;
    EmbeddingProvider* embedder = nullptr;
    const TypeIndex* types = nullptr;
    const Sandbox* sandbox = nullptr;
};

/// What the agent is asked to do. Only the public suite is visible here.
struct Task
{
    std::string problem_id;
    std::string task_kind;
    std::string query;
    std::vector<TestSpec> public_tests;
};

enum class TerminalReason
{
    SubmitPass,
    BudgetExhausted,
    ProviderError,
};

std::string_view to_string(TerminalReason reason);
std::optional<TerminalReason> terminal_reason_from_string(std::string_view s);

struct Trajectory
{
    std::string problem_id;
    std::string task_kind;
    int max_turns = 0;
    std::vector<Step> steps;
    TerminalReason terminal_reason = TerminalReason::BudgetExhausted;
    std::string final_solution;
    /// Set for provider-error trajectories.
    std::string error;
    /// Filled by the harness after private grading.
    std::optional<bool> accepted;
    std::optional<bool> compiled;
    long long wall_time_ms = 0;

    /// One JSONL record. Timings are excluded so that logs are reproducible.
    nlohmann::json to_json() const;
    static Trajectory from_json(const nlohmann::json& j);
};

/// The tool set exposed for `resources`.
std::vector<ToolSpec> tools_for(const Resources& resources);

/// Routes one action to its primitive and returns the (capped) observation.
Observation dispatch(const Action& action,
                     const Resources& resources,
                     const Task& task,
                     const AgentConfig& config);

/// The decide -> dispatch -> append loop. Stops when a Submit passes every
/// public test or after `config.max_turns` actions.
Trajectory run_trajectory(const Task& task, const Resources& resources, Policy& policy, const AgentConfig& config);

/// Last Submit payload, else the last fenced block of the last invalid
/// action's raw text, else empty.
std::string final_solution_of(const std::vector<Step>& steps);

struct ReplayResult
{
    Trajectory replayed;
    /// Turn indices whose observation differs from the logged one.
    std::vector<int> mismatched_turns;
};

/// Re-executes the logged actions against `resources`.
ReplayResult replay(const Trajectory& logged, const Task& task, const Resources& resources, const AgentConfig& config);

} // namespace ila
