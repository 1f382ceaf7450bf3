// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <ila/agent.hpp>
#include <ila/policy.hpp>
#include <ila/sandbox.hpp>

#include <nlohmann/json.hpp>

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ila
{

enum class TaskKind
{
    Generate,
    Translate,
    Repair,
};

std::string_view to_string(TaskKind kind);
std::optional<TaskKind> task_kind_from_string(std::string_view s);

struct Problem
{
    std::string id;
    TaskKind kind = TaskKind::Generate;
    std::string prompt;
    /// Source program to translate, or the buggy program to repair.
    std::optional<std::string> source_code;
    std::optional<std::string> signature;
    /// Observed failure of a repair problem, shown to the model when present.
    std::optional<std::string> symptom;
    /// A known-correct solution. Used only by scripted policies and fixture checks.
    std::optional<std::string> reference_solution;
    std::vector<TestSpec> public_tests;
    std::vector<TestSpec> private_tests;

    static Problem from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

/// A directory of *.json problem files (sorted by file name) or one JSONL
/// file. Throws LoadError naming the file and field on schema violations
/// and on duplicate ids.
std::vector<Problem> load_problems(const std::filesystem::path& path);

/// Throws ConfigError unless every repair problem's source compiles.
void check_repair_sources(const std::vector<Problem>& problems, const Sandbox& sandbox);

/// The query Q: prompt, signature, source code and symptom as present.
std::string build_query(const Problem& problem);

/// Public-only view of a problem handed to the agent.
Task make_task(const Problem& problem);

struct CorpusStats
{
    struct Row
    {
        std::size_t problems = 0;
        std::size_t public_tests = 0;
        std::size_t private_tests = 0;
    };

    std::map<TaskKind, Row> by_kind;
    Row total;

    std::string to_table() const;
    nlohmann::json to_json() const;
};

CorpusStats corpus_stats(const std::vector<Problem>& problems);

// ---------------------------------------------------------------- metrics

struct ProblemRecord
{
    std::string id;
    TaskKind kind = TaskKind::Generate;
    bool accepted = false;
    bool compiled = false;
    std::string terminal_reason;
    int turns_used = 0;
    bool provider_error = false;
    bool infrastructure_error = false;
};

struct Rate
{
    std::size_t total = 0;
    std::size_t accepted = 0;
    std::size_t compiled = 0;
    long long acc_hundredths = 0;
    long long cr_hundredths = 0;

    std::string acc() const;
    std::string cr() const;
};

struct MetricsReport
{
    std::string mode;
    std::vector<ProblemRecord> records;
    Rate overall;
    std::map<TaskKind, Rate> by_kind;
    std::size_t provider_errors = 0;
    std::size_t infrastructure_errors = 0;

    nlohmann::json to_json() const;
    std::string to_table() const;
};

/// ACC and CR as percentages rounded half-up to two decimals. Throws
/// std::invalid_argument on empty input.
MetricsReport compute_metrics(std::vector<ProblemRecord> records, std::string mode = {});

// ---------------------------------------------------------------- runs

enum class Mode
{
    ZeroShot,
    SingleRag,
    IterativeRag,
    IlaAgent,
};

std::string_view to_string(Mode mode);
std::optional<Mode> mode_from_string(std::string_view s);

struct RagConfig
{
    std::size_t max_queries = 5;
    std::size_t top_k = 5;
    std::size_t max_rounds = 5;
    std::size_t queries_per_round = 3;
};

struct RunConfig
{
    Mode mode = Mode::IlaAgent;
    AgentConfig agent;
    RagConfig rag;
    double temperature = 1.0;
    unsigned parallelism = 1;
};

/// Creates the per-problem decision makers. `chat` serves the baselines,
/// `policy` the agent mode.
struct Factories
{
    std::function<std::shared_ptr<ChatProvider>(const Problem&)> chat;
    std::function<std::unique_ptr<Policy>(const Problem&)> policy;
};

struct RunOutput
{
    MetricsReport report;
    /// One record per problem, in input order; timings excluded.
    std::vector<nlohmann::json> log;
    /// Per-problem wall times, kept apart from the reproducible log.
    std::vector<nlohmann::json> timings;
};

/// Throws ConfigError when `resources` lacks what `mode` needs.
void check_resources(Mode mode, const Resources& resources);

RunOutput run_mode(const std::vector<Problem>& problems,
                   const Resources& resources,
                   const Factories& factories,
                   const RunConfig& config);

// Baseline building blocks, exposed for tests.

/// JSON array of strings if the text contains one, else one query per
/// non-empty line with list markers stripped. Distinct, at most `limit`.
std::vector<std::string> parse_queries(std::string_view text, std::size_t limit);

struct ControllerDecision
{
    bool sufficient = false;
    std::vector<std::string> queries;
    bool malformed = false;
};

ControllerDecision parse_controller_decision(std::string_view text, std::size_t max_queries);

} // namespace ila
