// SPDX-License-Identifier: Apache-2.0
#include <ila/error.hpp>
#include <ila/sandbox.hpp>
#include <ila/text.hpp>

#include <nlohmann/json.hpp>

#include <cerrno>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

extern char** environ;

namespace ila
{

namespace fs = std::filesystem;

std::string_view to_string(Phase phase)
{
    return phase == Phase::Compile ? "compile" : "run";
}

std::string ExecResult::exit_label() const
{
    switch (outcome)
    {
    case Outcome::Exited: return std::to_string(exit_code);
    case Outcome::Timeout: return "timeout";
    case Outcome::SpawnFailure: return "spawn-failure";
    }
    return "spawn-failure";
}

std::size_t SubmitResult::passed_count() const
{
    std::size_t n = 0;
    for (const auto& t : tests)
        n += t.passed;
    return n;
}

// ---------------------------------------------------------------- config

ToolchainConfig ToolchainConfig::from_json(const nlohmann::json& j)
{
    ToolchainConfig c;
    try
    {
        c.name = j.value("name", c.name);
        if (j.contains("compile_cmd") && !j["compile_cmd"].is_null())
            c.compile_cmd = j["compile_cmd"].get<std::string>();
        c.run_cmd = j.at("run_cmd").get<std::string>();
        c.file_extension = j.at("file_extension").get<std::string>();
        c.compile_timeout_s = j.value("compile_timeout_s", c.compile_timeout_s);
        c.run_timeout_s = j.value("run_timeout_s", c.run_timeout_s);
        c.max_output_chars = j.value("max_output_chars", c.max_output_chars);
        c.harness_template = j.value("harness_template", c.harness_template);
        c.env_allowlist = j.value("env_allowlist", c.env_allowlist);
        if (j.contains("parse_error_exit_code") && !j["parse_error_exit_code"].is_null())
            c.parse_error_exit_code = j["parse_error_exit_code"].get<int>();
        c.keep_artifacts = j.value("keep_artifacts", c.keep_artifacts);
    }
    catch (const nlohmann::json::exception& e)
    {
        throw ConfigError(std::string("invalid toolchain config: ") + e.what());
    }
    if (!c.file_extension.empty() && c.file_extension.front() == '.')
        c.file_extension.erase(0, 1);
    if (text::trim(c.run_cmd).empty())
        throw ConfigError("toolchain config: run_cmd must not be empty");
    if (c.compile_cmd && text::trim(*c.compile_cmd).empty())
        c.compile_cmd.reset();
    if (c.file_extension.empty())
        throw ConfigError("toolchain config: file_extension must not be empty");
    if (c.compile_timeout_s <= 0 || c.run_timeout_s <= 0)
        throw ConfigError("toolchain config: timeouts must be positive");
    if (c.max_output_chars == 0)
        throw ConfigError("toolchain config: max_output_chars must be positive");
    return c;
}

ToolchainConfig ToolchainConfig::load(const fs::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot read toolchain config: " + path.string());
    try
    {
        return from_json(nlohmann::json::parse(in));
    }
    catch (const nlohmann::json::parse_error& e)
    {
        throw ConfigError("malformed toolchain config " + path.string() + ": " + e.what());
    }
}

nlohmann::json ToolchainConfig::to_json() const
{
    nlohmann::json j = {{"name", name},
                        {"run_cmd", run_cmd},
                        {"file_extension", file_extension},
                        {"compile_timeout_s", compile_timeout_s},
                        {"run_timeout_s", run_timeout_s},
                        {"max_output_chars", max_output_chars},
                        {"harness_template", harness_template},
                        {"env_allowlist", env_allowlist},
                        {"keep_artifacts", keep_artifacts}};
    j["compile_cmd"] = compile_cmd ? nlohmann::json(*compile_cmd) : nlohmann::json(nullptr);
    j["parse_error_exit_code"] = parse_error_exit_code ? nlohmann::json(*parse_error_exit_code) : nlohmann::json(nullptr);
    return j;
}

TestSpec TestSpec::from_json(const nlohmann::json& j)
{
    TestSpec t;
    t.test_id = j.at("test_id").get<std::string>();
    auto kind = j.at("kind").get<std::string>();
    if (kind == "harness")
    {
        t.kind = Kind::Harness;
        t.program = j.at("program").get<std::string>();
    }
    else if (kind == "io")
    {
        t.kind = Kind::Io;
        t.stdin_text = j.value("stdin", "");
        t.expected_stdout = j.at("expected_stdout").get<std::string>();
    }
    else
        throw nlohmann::json::other_error::create(501, "unknown test kind '" + kind + "'", &j);
    return t;
}

nlohmann::json TestSpec::to_json() const
{
    if (kind == Kind::Harness)
        return {{"test_id", test_id}, {"kind", "harness"}, {"program", program}};
    return {{"test_id", test_id}, {"kind", "io"}, {"stdin", stdin_text}, {"expected_stdout", expected_stdout}};
}

// ---------------------------------------------------------------- comparison

namespace
{

std::vector<std::string> normalized_lines(std::string_view s)
{
    auto lines = text::split_lines(s);
    for (auto& l : lines)
        l = text::rtrim(l);
    while (!lines.empty() && lines.back().empty())
        lines.pop_back();
    return lines;
}

std::string excerpt(std::string_view s)
{
    constexpr std::size_t kMax = 200;
    auto cut = s.size() > kMax ? std::string(s.substr(0, kMax)) + "..." : std::string(s);
    return "\"" + text::sanitize_utf8(cut) + "\"";
}

} // namespace

std::optional<std::string> first_divergence(std::string_view expected, std::string_view actual)
{
    auto want = normalized_lines(expected);
    auto got = normalized_lines(actual);
    for (std::size_t i = 0; i < std::max(want.size(), got.size()); ++i)
    {
        if (i < want.size() && i < got.size() && want[i] == got[i])
            continue;
        std::string msg = "output differs at line " + std::to_string(i + 1) + ": expected ";
        msg += i < want.size() ? excerpt(want[i]) : "<end of output>";
        msg += ", got ";
        msg += i < got.size() ? excerpt(got[i]) : "<end of output>";
        return msg;
    }
    return std::nullopt;
}

// ---------------------------------------------------------------- processes

namespace
{

std::vector<std::string> split_command(const std::string& cmd)
{
    std::vector<std::string> out;
    std::string cur;
    bool in_token = false;
    char quote = 0;
    for (char c : cmd)
    {
        if (quote)
        {
            if (c == quote)
                quote = 0;
            else
                cur += c;
            continue;
        }
        if (c == '\'' || c == '"')
        {
            quote = c;
            in_token = true;
            continue;
        }
        if (c == ' ' || c == '\t' || c == '\n')
        {
            if (in_token)
                out.push_back(std::exchange(cur, {}));
            in_token = false;
            continue;
        }
        cur += c;
        in_token = true;
    }
    if (quote)
        throw ConfigError("unterminated quote in command template: " + cmd);
    if (in_token)
        out.push_back(cur);
    return out;
}

void replace_all(std::string& s, std::string_view from, std::string_view to)
{
    if (from.empty())
        return;
    for (std::size_t pos = 0; (pos = s.find(from, pos)) != std::string::npos; pos += to.size())
        s.replace(pos, from.size(), to);
}

std::optional<std::string> resolve_program(const std::string& name)
{
    if (name.find('/') != std::string::npos)
        return ::access(name.c_str(), X_OK) == 0 ? std::optional(name) : std::nullopt;
    const char* path = std::getenv("PATH");
    std::stringstream dirs(path ? path : "/usr/local/bin:/usr/bin:/bin");
    std::string dir;
    while (std::getline(dirs, dir, ':'))
    {
        if (dir.empty())
            continue;
        auto candidate = dir + "/" + name;
        if (::access(candidate.c_str(), X_OK) == 0)
            return candidate;
    }
    return std::nullopt;
}

struct RawRun
{
    ExecResult::Outcome outcome = ExecResult::Outcome::Exited;
    int exit_code = 0;
    std::string out;
    std::string err;
    bool out_overflow = false;
    bool err_overflow = false;
    std::string spawn_error;
    long long wall_ms = 0;
};

RawRun run_process(const std::vector<std::string>& argv,
                   const fs::path& cwd,
                   const std::vector<std::string>& env,
                   const fs::path& stdin_file,
                   double timeout_s,
                   std::size_t byte_cap)
{
    RawRun r;
    auto start = std::chrono::steady_clock::now();
    auto finish = [&] {
        r.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start)
                        .count();
    };

    auto program = resolve_program(argv.at(0));
    if (!program)
    {
        r.outcome = ExecResult::Outcome::SpawnFailure;
        r.spawn_error = "command not found: " + argv[0];
        finish();
        return r;
    }

    std::vector<char*> cargv;
    for (const auto& a : argv)
        cargv.push_back(const_cast<char*>(a.c_str()));
    cargv.push_back(nullptr);
    std::vector<char*> cenv;
    for (const auto& e : env)
        cenv.push_back(const_cast<char*>(e.c_str()));
    cenv.push_back(nullptr);
    const std::string cwd_str = cwd.string();
    const std::string stdin_str = stdin_file.string();

    int out_pipe[2], err_pipe[2], exec_pipe[2];
    if (::pipe2(out_pipe, O_CLOEXEC) != 0 || ::pipe2(err_pipe, O_CLOEXEC) != 0 || ::pipe2(exec_pipe, O_CLOEXEC) != 0)
    {
        r.outcome = ExecResult::Outcome::SpawnFailure;
        r.spawn_error = std::string("pipe: ") + std::strerror(errno);
        finish();
        return r;
    }

    pid_t pid = ::fork();
    if (pid < 0)
    {
        for (int fd : {out_pipe[0], out_pipe[1], err_pipe[0], err_pipe[1], exec_pipe[0], exec_pipe[1]})
            ::close(fd);
        r.outcome = ExecResult::Outcome::SpawnFailure;
        r.spawn_error = std::string("fork: ") + std::strerror(errno);
        finish();
        return r;
    }
    if (pid == 0)
    {
        // child: only async-signal-safe calls from here on
        ::setpgid(0, 0);
        int in_fd = ::open(stdin_str.c_str(), O_RDONLY);
        if (in_fd < 0 || ::dup2(in_fd, 0) < 0 || ::dup2(out_pipe[1], 1) < 0 || ::dup2(err_pipe[1], 2) < 0 ||
            ::chdir(cwd_str.c_str()) != 0)
        {
            int e = errno;
            [[maybe_unused]] auto n = ::write(exec_pipe[1], &e, sizeof e);
            ::_exit(127);
        }
        ::execve(program->c_str(), cargv.data(), cenv.data());
        int e = errno;
        [[maybe_unused]] auto n = ::write(exec_pipe[1], &e, sizeof e);
        ::_exit(127);
    }

    ::setpgid(pid, pid);
    ::close(out_pipe[1]);
    ::close(err_pipe[1]);
    ::close(exec_pipe[1]);

    int child_errno = 0;
    bool exec_failed = ::read(exec_pipe[0], &child_errno, sizeof child_errno) == sizeof child_errno;
    ::close(exec_pipe[0]);

    auto deadline = start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                std::chrono::duration<double>(timeout_s));
    bool timed_out = false;
    pollfd fds[2] = {{out_pipe[0], POLLIN, 0}, {err_pipe[0], POLLIN, 0}};
    int open_fds = 2;
    char buf[8192];
    while (open_fds > 0)
    {
        auto now = std::chrono::steady_clock::now();
        if (now >= deadline)
        {
            timed_out = true;
            break;
        }
        auto wait_ms = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count() + 1;
        int rc = ::poll(fds, 2, static_cast<int>(std::min<long long>(wait_ms, 1000)));
        if (rc < 0 && errno != EINTR)
            break;
        for (int i = 0; i < 2; ++i)
        {
            if (fds[i].fd < 0 || !(fds[i].revents & (POLLIN | POLLHUP | POLLERR)))
                continue;
            auto n = ::read(fds[i].fd, buf, sizeof buf);
            if (n <= 0)
            {
                ::close(fds[i].fd);
                fds[i].fd = -1;
                --open_fds;
                continue;
            }
            auto& target = i == 0 ? r.out : r.err;
            auto& overflow = i == 0 ? r.out_overflow : r.err_overflow;
            auto room = byte_cap > target.size() ? byte_cap - target.size() : 0;
            target.append(buf, std::min<std::size_t>(room, static_cast<std::size_t>(n)));
            if (static_cast<std::size_t>(n) > room)
                overflow = true;
        }
    }

    int status = 0;
    if (timed_out)
    {
        ::kill(-pid, SIGKILL);
        ::waitpid(pid, &status, 0);
    }
    else
    {
        // Output closed; the process may still be running (e.g. closed its
        // stdout). Keep honoring the deadline.
        while (true)
        {
            auto w = ::waitpid(pid, &status, WNOHANG);
            if (w == pid || (w < 0 && errno != EINTR))
                break;
            if (std::chrono::steady_clock::now() >= deadline)
            {
                timed_out = true;
                ::kill(-pid, SIGKILL);
                ::waitpid(pid, &status, 0);
                break;
            }
            ::usleep(2000);
        }
    }
    ::kill(-pid, SIGKILL);  // stray grandchildren
    for (auto& f : fds)
        if (f.fd >= 0)
            ::close(f.fd);
    finish();

    if (exec_failed)
    {
        r.outcome = ExecResult::Outcome::SpawnFailure;
        r.spawn_error = "cannot execute " + argv[0] + ": " + std::strerror(child_errno);
    }
    else if (timed_out)
        r.outcome = ExecResult::Outcome::Timeout;
    else if (WIFEXITED(status))
        r.exit_code = WEXITSTATUS(status);
    else if (WIFSIGNALED(status))
        r.exit_code = 128 + WTERMSIG(status);
    return r;
}

std::vector<std::string> allowed_environment(const std::vector<std::string>& allowlist)
{
    std::vector<std::string> env;
    for (const auto& name : allowlist)
        if (const char* v = std::getenv(name.c_str()))
            env.push_back(name + "=" + v);
    return env;
}

std::string clean_output(std::string raw, bool overflow, const fs::path& workdir, std::size_t max_chars)
{
    // Paths inside the throwaway workdir are reported relative to it, so
    // feedback is identical across invocations.
    replace_all(raw, workdir.string() + "/", "");
    replace_all(raw, workdir.string(), ".");
    auto text = text::sanitize_utf8(raw);
    auto out = text::truncate(text, max_chars);
    if (overflow && out.size() == text.size())
        out += text::kTruncationMarker;
    return out;
}

} // namespace

/// A fresh temporary directory, removed on destruction unless kept.
class Sandbox::Workdir
{
public:
    explicit Workdir(bool keep): keep_(keep)
    {
        auto tmpl = (fs::temp_directory_path() / "ila-sandbox-XXXXXX").string();
        std::vector<char> buf(tmpl.begin(), tmpl.end());
        buf.push_back('\0');
        if (!::mkdtemp(buf.data()))
            throw IoError(std::string("cannot create sandbox directory: ") + std::strerror(errno));
        path_ = fs::path(buf.data());
    }

    ~Workdir()
    {
        if (!keep_)
        {
            std::error_code ec;
            fs::remove_all(path_, ec);
        }
    }

    Workdir(const Workdir&) = delete;
    Workdir& operator=(const Workdir&) = delete;

    const fs::path& path() const { return path_; }

    void write(const std::string& name, std::string_view content) const
    {
        std::ofstream out(path_ / name, std::ios::binary);
        out << content;
        if (!out)
            throw IoError("cannot write " + (path_ / name).string());
    }

private:
    fs::path path_;
    bool keep_;
};

Sandbox::Sandbox(ToolchainConfig config): config_(std::move(config)) {}

ExecResult Sandbox::spawn(const Workdir& dir,
                          Phase phase,
                          const std::string& command_template,
                          std::string_view stdin_text,
                          double timeout_s) const
{
    auto src = (dir.path() / ("main." + config_.file_extension)).string();
    auto bin = (dir.path() / "main").string();
    auto argv = split_command(command_template);
    if (argv.empty())
        throw ConfigError("empty command template");
    for (auto& a : argv)
    {
        replace_all(a, "{src}", src);
        replace_all(a, "{bin}", bin);
        replace_all(a, "{workdir}", dir.path().string());
    }
    dir.write(".stdin", stdin_text);
    if (audit_)
        audit_(SpawnRecord{argv, dir.path()});

    const std::size_t byte_cap = config_.max_output_chars * 4 + 4;
    auto raw = run_process(argv, dir.path(), allowed_environment(config_.env_allowlist), dir.path() / ".stdin",
                           timeout_s, byte_cap);

    ExecResult r;
    r.phase = phase;
    r.outcome = raw.outcome;
    r.exit_code = raw.exit_code;
    r.wall_time_ms = raw.wall_ms;
    r.stdout_text = clean_output(std::move(raw.out), raw.out_overflow, dir.path(), config_.max_output_chars);
    if (raw.outcome == ExecResult::Outcome::SpawnFailure)
        r.stderr_text = text::truncate(raw.spawn_error, config_.max_output_chars);
    else
        r.stderr_text = clean_output(std::move(raw.err), raw.err_overflow, dir.path(), config_.max_output_chars);
    return r;
}

ExecResult Sandbox::compile_in(const Workdir& dir) const
{
    return spawn(dir, Phase::Compile, *config_.compile_cmd, {}, config_.compile_timeout_s);
}

ExecResult Sandbox::run_in(const Workdir& dir, std::string_view stdin_text) const
{
    return spawn(dir, Phase::Run, config_.run_cmd, stdin_text, config_.run_timeout_s);
}

std::vector<ExecResult> Sandbox::execute(std::string_view snippet, std::string_view stdin_text) const
{
    Workdir dir(config_.keep_artifacts);
    dir.write("main." + config_.file_extension, snippet);
    std::vector<ExecResult> phases;
    if (config_.compile_cmd)
    {
        phases.push_back(compile_in(dir));
        if (!phases.back().ok())
            return phases;
    }
    phases.push_back(run_in(dir, stdin_text));
    return phases;
}

bool Sandbox::compiled_ok(const std::vector<ExecResult>& phases) const
{
    if (phases.empty())
        return false;
    const auto& first = phases.front();
    if (first.phase == Phase::Compile)
        return first.ok();
    if (first.outcome == ExecResult::Outcome::SpawnFailure)
        return false;
    if (first.outcome == ExecResult::Outcome::Timeout)
        return true;
    return !config_.parse_error_exit_code || first.exit_code != *config_.parse_error_exit_code;
}

bool Sandbox::compiles(std::string_view source) const
{
    if (text::trim(source).empty())
        return false;
    Workdir dir(config_.keep_artifacts);
    dir.write("main." + config_.file_extension, source);
    if (config_.compile_cmd)
        return compile_in(dir).ok();
    return compiled_ok({run_in(dir, {})});
}

TestOutcome Sandbox::run_harness(std::string_view solution, const TestSpec& test, bool& infra) const
{
    std::string combined = config_.harness_template;
    // {test} first: the solution itself may contain the literal "{test}".
    replace_all(combined, "{test}", "\x01TEST\x01");
    replace_all(combined, "{solution}", solution);
    replace_all(combined, "\x01TEST\x01", test.program);

    Workdir dir(config_.keep_artifacts);
    dir.write("main." + config_.file_extension, combined);
    if (config_.compile_cmd)
    {
        auto c = compile_in(dir);
        infra |= c.outcome == ExecResult::Outcome::SpawnFailure;
        if (!c.ok())
            return {test.test_id, false, "test program failed to compile (exit " + c.exit_label() + "):\n" + c.stderr_text};
    }
    auto r = run_in(dir, {});
    infra |= r.outcome == ExecResult::Outcome::SpawnFailure;
    if (r.ok())
        return {test.test_id, true, {}};
    auto detail = r.stderr_text.empty() ? r.stdout_text : r.stderr_text;
    return {test.test_id, false, "exit " + r.exit_label() + (detail.empty() ? "" : ":\n" + detail)};
}

SubmitResult Sandbox::submit(std::string_view solution, std::span<const TestSpec> suite) const
{
    SubmitResult result;
    if (text::trim(solution).empty())
    {
        for (const auto& t : suite)
            result.tests.push_back({t.test_id, false, "empty solution"});
        return result;
    }

    // Compile the solution on its own once; io tests reuse the artifacts.
    Workdir dir(config_.keep_artifacts);
    dir.write("main." + config_.file_extension, solution);
    std::vector<ExecResult> check;
    if (config_.compile_cmd)
        check.push_back(compile_in(dir));
    else
        check.push_back(run_in(dir, {}));
    result.compiled = compiled_ok(check);
    result.infrastructure_error = check.front().outcome == ExecResult::Outcome::SpawnFailure;

    if (!result.compiled)
    {
        const auto& c = check.front();
        std::string why = "solution does not compile (exit " + c.exit_label() + ")";
        if (!c.stderr_text.empty())
            why += ":\n" + c.stderr_text;
        for (const auto& t : suite)
            result.tests.push_back({t.test_id, false, why});
        return result;
    }

    for (const auto& t : suite)
    {
        if (t.kind == TestSpec::Kind::Harness)
        {
            result.tests.push_back(run_harness(solution, t, result.infrastructure_error));
            continue;
        }
        auto r = run_in(dir, t.stdin_text);
        result.infrastructure_error |= r.outcome == ExecResult::Outcome::SpawnFailure;
        if (!r.ok())
        {
            auto detail = r.stderr_text.empty() ? r.stdout_text : r.stderr_text;
            result.tests.push_back({t.test_id, false, "exit " + r.exit_label() + (detail.empty() ? "" : ":\n" + detail)});
            continue;
        }
        if (auto diff = first_divergence(t.expected_stdout, r.stdout_text))
            result.tests.push_back({t.test_id, false, *diff});
        else
            result.tests.push_back({t.test_id, true, {}});
    }
    result.all_passed = !result.tests.empty() && result.passed_count() == result.tests.size();
    return result;
}

GradeResult Sandbox::grade(std::string_view solution, std::span<const TestSpec> suite) const
{
    auto s = submit(solution, suite);
    GradeResult g;
    g.compiled = s.compiled;
    g.accepted = s.compiled && s.all_passed;
    g.infrastructure_error = s.infrastructure_error;
    g.tests = std::move(s.tests);
    return g;
}

} // namespace ila
