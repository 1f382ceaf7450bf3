// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <nlohmann/json_fwd.hpp>

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ila
{

/// How to build and run programs of the target language. Command templates
/// are split on whitespace (single and double quotes group) and may use the
/// placeholders {src}, {bin} and {workdir}.
struct ToolchainConfig
{
    std::string name = "toolchain";
    /// Absent for interpreted languages.
    std::optional<std::string> compile_cmd;
    std::string run_cmd;
    /// Without the leading dot.
    std::string file_extension;
    double compile_timeout_s = 60.0;
    double run_timeout_s = 10.0;
    std::size_t max_output_chars = 8000;
    /// How a harness test program is combined with the solution under test.
    std::string harness_template = "{solution}\n{test}\n";
    /// Environment variables forwarded to child processes; everything else is dropped.
    std::vector<std::string> env_allowlist = {"PATH", "HOME", "LANG", "LC_ALL", "TMPDIR"};
    /// For toolchains without compile_cmd: the exit code the interpreter uses
    /// when the program fails to parse. A solution "compiles" unless the
    /// run phase ends with this code (or cannot be spawned).
    std::optional<int> parse_error_exit_code;
    bool keep_artifacts = false;

    static ToolchainConfig from_json(const nlohmann::json& j);
    static ToolchainConfig load(const std::filesystem::path& path);
    nlohmann::json to_json() const;
};

enum class Phase
{
    Compile,
    Run,
};

std::string_view to_string(Phase phase);

struct ExecResult
{
    enum class Outcome
    {
        Exited,
        Timeout,
        SpawnFailure,
    };

    Phase phase = Phase::Run;
    Outcome outcome = Outcome::Exited;
    int exit_code = 0;  // meaningful when outcome == Exited
    std::string stdout_text;
    std::string stderr_text;
    long long wall_time_ms = 0;

    bool ok() const { return outcome == Outcome::Exited && exit_code == 0; }
    /// "0", "1", ..., "timeout" or "spawn-failure".
    std::string exit_label() const;
};

struct TestSpec
{
    enum class Kind
    {
        Harness,
        Io,
    };

    std::string test_id;
    Kind kind = Kind::Io;
    /// Harness: test program combined with the solution. Passes on exit 0.
    std::string program;
    /// Io: fed on stdin; stdout compared ignoring trailing whitespace.
    std::string stdin_text;
    std::string expected_stdout;

    static TestSpec from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

struct TestOutcome
{
    std::string test_id;
    bool passed = false;
    std::string feedback;
};

struct SubmitResult
{
    std::vector<TestOutcome> tests;
    bool all_passed = false;
    bool compiled = false;
    /// A process could not be spawned (missing toolchain, exhausted resources).
    bool infrastructure_error = false;

    std::size_t passed_count() const;
};

struct GradeResult
{
    bool accepted = false;
    bool compiled = false;
    bool infrastructure_error = false;
    std::vector<TestOutcome> tests;
};

/// One spawned child process, reported to the audit hook.
struct SpawnRecord
{
    std::vector<std::string> argv;
    std::filesystem::path cwd;
};

/// Compares program output with the expected text, ignoring trailing
/// whitespace on every line and trailing blank lines. Returns nothing on a
/// match, else a description of the first differing line.
std::optional<std::string> first_divergence(std::string_view expected, std::string_view actual);

/// The execution environment: every invocation gets a fresh temporary
/// working directory, which is the child's CWD and is removed afterwards.
/// Thread-safe; invocations are independent.
class Sandbox
{
public:
    explicit Sandbox(ToolchainConfig config);

    const ToolchainConfig& config() const { return config_; }

    /// Writes `snippet` to main.<ext>, compiles (if configured) and runs it.
    /// Returns the phases that ran, in order.
    std::vector<ExecResult> execute(std::string_view snippet, std::string_view stdin_text = {}) const;

    /// Grades against the public suite. Agent-facing.
    SubmitResult submit(std::string_view solution, std::span<const TestSpec> suite) const;

    /// Grades against the private suite. Harness-only; accepted implies compiled.
    GradeResult grade(std::string_view solution, std::span<const TestSpec> suite) const;

    /// Whether `source` alone compiles (or, for interpreted toolchains, starts).
    bool compiles(std::string_view source) const;

    void set_audit_hook(std::function<void(const SpawnRecord&)> hook) { audit_ = std::move(hook); }

private:
    ToolchainConfig config_;
    std::function<void(const SpawnRecord&)> audit_;

    class Workdir;

    ExecResult compile_in(const Workdir& dir) const;
    ExecResult run_in(const Workdir& dir, std::string_view stdin_text) const;
    ExecResult spawn(const Workdir& dir, Phase phase, const std::string& command_template,
                     std::string_view stdin_text, double timeout_s) const;
    bool compiled_ok(const std::vector<ExecResult>& phases) const;
    TestOutcome run_harness(std::string_view solution, const TestSpec& test, bool& infra) const;
};

} // namespace ila
