// SPDX-License-Identifier: Apache-2.0
#include "../support/support.hpp"

#include <ila/error.hpp>
#include <ila/sandbox.hpp>
#include <ila/text.hpp>

#include <nlohmann/json.hpp>

#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <mutex>
#include <random>
#include <set>

using namespace ila;
using namespace ila::testing;
namespace fs = std::filesystem;

namespace
{

TestSpec io(std::string id, std::string in, std::string out)
{
    TestSpec t;
    t.test_id = std::move(id);
    t.kind = TestSpec::Kind::Io;
    t.stdin_text = std::move(in);
    t.expected_stdout = std::move(out);
    return t;
}

TestSpec harness(std::string id, std::string program)
{
    TestSpec t;
    t.test_id = std::move(id);
    t.kind = TestSpec::Kind::Harness;
    t.program = std::move(program);
    return t;
}

const char* kEcho = "let line = read_line();\nwhile line != nil {\n    print(line);\n    line = read_line();\n}\n";

bool same(const SubmitResult& a, const SubmitResult& b)
{
    if (a.all_passed != b.all_passed || a.compiled != b.compiled || a.tests.size() != b.tests.size())
        return false;
    for (std::size_t i = 0; i < a.tests.size(); ++i)
        if (a.tests[i].test_id != b.tests[i].test_id || a.tests[i].passed != b.tests[i].passed ||
            a.tests[i].feedback != b.tests[i].feedback)
            return false;
    return true;
}

} // namespace

TEST_CASE("toolchain config parsing")
{
    auto tc = fixture_toolchain();
    CHECK(tc.compile_cmd);
    CHECK(tc.file_extension == "pbl");
    CHECK(tc.parse_error_exit_code == 65);

    auto round = ToolchainConfig::from_json(tc.to_json());
    CHECK(round.to_json() == tc.to_json());

    auto defaults = ToolchainConfig::from_json({{"run_cmd", "x {src}"}, {"file_extension", "x"}});
    CHECK(defaults.compile_timeout_s == 60.0);
    CHECK(defaults.run_timeout_s == 10.0);
    CHECK(defaults.max_output_chars == 8000);

    CHECK_THROWS_AS(ToolchainConfig::from_json({{"file_extension", "x"}}), ConfigError);
    CHECK_THROWS_AS(ToolchainConfig::from_json({{"run_cmd", ""}, {"file_extension", "x"}}), ConfigError);
    CHECK_THROWS_AS(ToolchainConfig::from_json({{"run_cmd", "x"}, {"file_extension", "x"}, {"run_timeout_s", 0}}),
                    ConfigError);
    CHECK_THROWS_AS(ToolchainConfig::load("/nonexistent/toolchain.json"), ConfigError);
}

TEST_CASE("first divergence")
{
    CHECK_FALSE(first_divergence("a\nb\n", "a\nb"));
    CHECK_FALSE(first_divergence("a  \nb\n\n\n", "a\nb   \n"));
    auto d = first_divergence("a\nb\nc\n", "a\nx\nc\n");
    REQUIRE(d);
    CHECK(d->find("line 2") != std::string::npos);
    CHECK(d->find("\"b\"") != std::string::npos);
    CHECK(d->find("\"x\"") != std::string::npos);
    auto shorter = first_divergence("a\nb\n", "a\n");
    REQUIRE(shorter);
    CHECK(shorter->find("line 2") != std::string::npos);
    CHECK(first_divergence("", "extra\n"));
}

TEST_CASE("execute runs the compile then run phase")
{
    Sandbox sb(fixture_toolchain());
    auto phases = sb.execute("print(42);\n");
    REQUIRE(phases.size() == 2);
    CHECK(phases[0].phase == Phase::Compile);
    CHECK(phases[0].ok());
    CHECK(phases[1].phase == Phase::Run);
    CHECK(phases[1].ok());
    CHECK(phases[1].stdout_text == "42\n");
    CHECK(phases[1].exit_label() == "0");
}

TEST_CASE("syntax errors stop after the compile phase")
{
    Sandbox sb(fixture_toolchain());
    auto phases = sb.execute("print(42\n");
    REQUIRE(phases.size() == 1);
    CHECK(phases[0].phase == Phase::Compile);
    CHECK(phases[0].exit_code == 65);
    CHECK_FALSE(phases[0].stderr_text.empty());
    CHECK_FALSE(sb.compiles("print(42\n"));
    CHECK(sb.compiles("print(42);\n"));
    CHECK_FALSE(sb.compiles(""));
}

TEST_CASE("stdin is forwarded")
{
    Sandbox sb(fixture_toolchain());
    auto phases = sb.execute(kEcho, "one\ntwo\n");
    CHECK(phases.back().stdout_text == "one\ntwo\n");
}

TEST_CASE("interpreted toolchains judge compilation by the parse exit code")
{
    auto tc = fixture_toolchain();
    tc.compile_cmd.reset();
    Sandbox sb(tc);
    CHECK(sb.compiles("print(1);\n"));
    CHECK(sb.compiles("assert(false);\n"));  // runtime failure still parsed
    CHECK_FALSE(sb.compiles("let = ;\n"));
    auto phases = sb.execute("print(1);\n");
    REQUIRE(phases.size() == 1);
    CHECK(phases[0].phase == Phase::Run);
}

TEST_CASE("runaway programs time out")
{
    auto tc = fixture_toolchain();
    tc.run_timeout_s = 1;
    Sandbox sb(tc);
    auto phases = sb.execute("print(\"start\");\nwhile true {\n}\n");
    REQUIRE(phases.size() == 2);
    CHECK(phases[1].outcome == ExecResult::Outcome::Timeout);
    CHECK(phases[1].exit_label() == "timeout");
    CHECK(phases[1].wall_time_ms >= 1000);
    CHECK(phases[1].wall_time_ms < 5000);
}

TEST_CASE("output is capped with a marker")
{
    auto tc = fixture_toolchain();
    tc.max_output_chars = 100;
    Sandbox sb(tc);
    auto phases = sb.execute("for i in 0..500 {\n    print(\"line \" + str(i));\n}\n");
    const auto& out = phases.back().stdout_text;
    CHECK(text::char_count(out) <= 100 + text::char_count(text::kTruncationMarker));
    CHECK(out.find(text::kTruncationMarker) != std::string::npos);
    CHECK(out.rfind("line 0\n", 0) == 0);
}

TEST_CASE("a missing toolchain is a spawn failure, not a crash")
{
    ToolchainConfig tc;
    tc.run_cmd = "/nonexistent/interpreter {src}";
    tc.file_extension = "x";
    Sandbox sb(tc);
    auto phases = sb.execute("anything");
    REQUIRE(phases.size() == 1);
    CHECK(phases[0].outcome == ExecResult::Outcome::SpawnFailure);
    CHECK(phases[0].exit_label() == "spawn-failure");
    CHECK_FALSE(phases[0].stderr_text.empty());

    auto r = sb.submit("anything", std::vector<TestSpec>{io("t", "", "")});
    CHECK(r.infrastructure_error);
    CHECK_FALSE(r.all_passed);
}

TEST_CASE("every invocation runs in a fresh, removed workdir")
{
    Sandbox sb(fixture_toolchain());
    std::mutex m;
    std::vector<SpawnRecord> spawns;
    sb.set_audit_hook([&](const SpawnRecord& r) {
        std::lock_guard lock(m);
        spawns.push_back(r);
    });
    sb.execute("print(1);\n");
    sb.submit(kEcho, std::vector<TestSpec>{io("a", "x\n", "x\n"), io("b", "y\n", "y\n")});
    sb.submit("fn f() { return 1; }\n", std::vector<TestSpec>{harness("h", "assert(f() == 1);")});
    REQUIRE(spawns.size() >= 6);

    std::set<fs::path> dirs;
    for (const auto& s : spawns)
    {
        CHECK(s.cwd.filename().string().rfind("ila-sandbox-", 0) == 0);
        CHECK_FALSE(fs::exists(s.cwd));
        dirs.insert(s.cwd);
        // Every path argument lives inside the workdir.
        for (std::size_t i = 1; i < s.argv.size(); ++i)
            if (s.argv[i].find('/') != std::string::npos)
                CHECK(s.argv[i].rfind(s.cwd.string() + "/", 0) == 0);
    }
    CHECK(dirs.size() >= 3);
}

TEST_CASE("environment is filtered through the allowlist")
{
    ::setenv("ILA_TEST_SECRET", "hunter2", 1);
    ToolchainConfig tc;
    tc.run_cmd = "env";
    tc.file_extension = "txt";
    Sandbox sb(tc);
    auto out = sb.execute("").back().stdout_text;
    CHECK(out.find("hunter2") == std::string::npos);
    CHECK(out.find("PATH=") != std::string::npos);
    ::unsetenv("ILA_TEST_SECRET");
}

TEST_CASE("workdir paths are scrubbed from output")
{
    Sandbox sb(fixture_toolchain());
    auto phases = sb.execute("print(1 + \"a\");\n");
    const auto& err = phases.back().stderr_text;
    CHECK(err.find("main.pbl:1: runtime error") != std::string::npos);
    CHECK(err.find("ila-sandbox-") == std::string::npos);
}

TEST_CASE("submit against io tests")
{
    Sandbox sb(fixture_toolchain());
    std::vector<TestSpec> suite{io("t1", "a\n", "a\n"), io("t2", "b\nc\n", "b\nc\n"), io("t3", "", "")};
    auto ok = sb.submit(kEcho, suite);
    CHECK(ok.compiled);
    CHECK(ok.all_passed);
    CHECK(ok.passed_count() == 3);

    suite[1].expected_stdout = "b\nC\n";
    auto one_bad = sb.submit(kEcho, suite);
    CHECK_FALSE(one_bad.all_passed);
    REQUIRE(one_bad.tests.size() == 3);
    CHECK(one_bad.tests[0].passed);
    CHECK_FALSE(one_bad.tests[1].passed);
    CHECK(one_bad.tests[1].feedback.find("line 2") != std::string::npos);
    CHECK(one_bad.tests[2].passed);
}

TEST_CASE("submit with a compile error fails every test")
{
    Sandbox sb(fixture_toolchain());
    std::vector<TestSpec> suite{io("t1", "a\n", "a\n"), harness("h", "assert(true);")};
    auto r = sb.submit("print(", suite);
    CHECK_FALSE(r.compiled);
    CHECK_FALSE(r.all_passed);
    for (const auto& t : r.tests)
    {
        CHECK_FALSE(t.passed);
        CHECK(t.feedback.find("parse error") != std::string::npos);
    }
}

TEST_CASE("harness tests pass on exit 0")
{
    Sandbox sb(fixture_toolchain());
    std::string sol = "fn double(x) {\n    return x * 2;\n}\n";
    std::vector<TestSpec> suite{harness("a", "assert(double(2) == 4, \"two\");"),
                                harness("b", "assert(double(3) == 7, \"three\");")};
    auto r = sb.submit(sol, suite);
    CHECK(r.compiled);
    CHECK(r.tests[0].passed);
    CHECK_FALSE(r.tests[1].passed);
    CHECK(r.tests[1].feedback.find("three") != std::string::npos);
}

TEST_CASE("harness substitution is literal")
{
    Sandbox sb(fixture_toolchain());
    std::string sol = "fn s() {\n    return \"{test}\";\n}\n";
    auto r = sb.submit(sol, std::vector<TestSpec>{harness("a", "assert(s() == \"{test}\");")});
    CHECK(r.all_passed);
}

TEST_CASE("empty solution never compiles")
{
    Sandbox sb(fixture_toolchain());
    std::vector<TestSpec> suite{io("t", "", "")};
    auto g = sb.grade("", suite);
    CHECK_FALSE(g.accepted);
    CHECK_FALSE(g.compiled);
    auto s = sb.submit("   \n", suite);
    CHECK_FALSE(s.compiled);
    CHECK_FALSE(s.all_passed);
}

TEST_CASE("grade accepts correct fixture solutions")
{
    auto& f = fixture();
    for (const auto& p : f.problems)
    {
        INFO(p.id);
        auto g = f.sandbox.grade(*p.reference_solution, p.private_tests);
        CHECK(g.accepted);
        CHECK(g.compiled);
    }
}

TEST_CASE("submit is deterministic")
{
    auto& f = fixture();
    const auto& p = f.problem("rep-03-binary-search");
    auto a = f.sandbox.submit(*p.source_code, p.public_tests);
    auto b = f.sandbox.submit(*p.source_code, p.public_tests);
    CHECK(same(a, b));
    CHECK_FALSE(a.all_passed);
}

TEST_CASE("accepted implies compiled over mutated solutions")
{
    auto& f = fixture();
    std::mt19937 rng(99);
    int accepted = 0, compiled = 0;
    for (int i = 0; i < 100; ++i)
    {
        const auto& p = f.problems[rng() % f.problems.size()];
        std::string sol = *p.reference_solution;
        switch (rng() % 4)
        {
        case 0: break;
        case 1: sol.erase(rng() % sol.size(), 1); break;
        case 2: sol.insert(rng() % sol.size(), 1, "{};()+\"x1"[rng() % 9]); break;
        case 3: sol = sol.substr(0, rng() % sol.size()); break;
        }
        auto g = f.sandbox.grade(sol, p.private_tests);
        CHECK((!g.accepted || g.compiled));
        accepted += g.accepted;
        compiled += g.compiled;
    }
    CHECK(accepted > 0);
    CHECK(compiled > accepted);
}
