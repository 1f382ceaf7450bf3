// SPDX-License-Identifier: Apache-2.0
#include "../support/support.hpp"

#include <ila/sandbox.hpp>

#include <catch_amalgamated.hpp>

using namespace ila;
using namespace ila::testing;

namespace
{

struct Run
{
    int exit_code;
    std::string out;
    std::string err;
};

Run run(const std::string& src, const std::string& in = {})
{
    auto tc = fixture_toolchain();
    tc.compile_cmd.reset();
    Sandbox sb(tc);
    auto r = sb.execute(src, in).back();
    return {r.exit_code, r.stdout_text, r.stderr_text};
}

} // namespace

TEST_CASE("pebble arithmetic and display")
{
    CHECK(run("print(1 + 2 * 3);").out == "7\n");
    CHECK(run("print(7 / -2);\nprint(-7 % 2);").out == "-3\n-1\n");
    CHECK(run("print([\"a\", 1, nil, true]);").out == "[\"a\", 1, nil, true]\n");
    CHECK(run("let m = map();\nm[\"b\"] = 2;\nm[1] = 0;\nprint(m);").out == "{1: 0, \"b\": 2}\n");
    CHECK(run("print(\"a\\tb\\\\\");").out == "a\tb\\\n");
}

TEST_CASE("pebble control flow and functions")
{
    auto r = run("fn fact(n) {\n    if n <= 1 { return 1; }\n    return n * fact(n - 1);\n}\n"
                 "let s = 0;\nfor i in 0..5 {\n    if i == 3 { continue; }\n    s = s + i;\n}\n"
                 "print(fact(10));\nprint(s);\n");
    CHECK(r.exit_code == 0);
    CHECK(r.out == "3628800\n7\n");
}

TEST_CASE("pebble string and array methods")
{
    CHECK(run("print(\"a,b,,c\".split(\",\"));").out == "[\"a\", \"b\", \"\", \"c\"]\n");
    CHECK(run("print(\"  hi \".trim().upper());").out == "HI\n");
    CHECK(run("print(\"42\".to_int() + 1);\nprint(\"4x\".to_int());").out == "43\nnil\n");
    CHECK(run("let a = [3, 1, 2];\na.sort();\nprint(a.join(\"-\"));").out == "1-2-3\n");
    CHECK(run("print(\"hello\".substr(1, 3));").out == "el\n");
    CHECK(run("print(\"A\".code());").out == "65\n");
}

TEST_CASE("pebble reads stdin until nil")
{
    auto r = run("let n = 0;\nwhile read_line() != nil { n = n + 1; }\nprint(n);", "a\nb\nc\n");
    CHECK(r.out == "3\n");
}

TEST_CASE("pebble exit codes")
{
    CHECK(run("print(1").exit_code == 65);
    CHECK(run("assert(1 == 2, \"nope\");").exit_code == 1);
    CHECK(run("assert(1 == 2, \"nope\");").err.find("assertion failed: nope") != std::string::npos);
    CHECK(run("print(1 + \"a\");").exit_code == 70);
    CHECK(run("exit(3);").exit_code == 3);
    CHECK(run("let x = [1];\nprint(x[5]);").err.find("out of range") != std::string::npos);
    CHECK(run("if 1 { }").err.find("condition must be Bool") != std::string::npos);
}

TEST_CASE("pebble rejects unsupported constructs at parse time")
{
    CHECK(run("fn f() {\n    fn g() { }\n}\n").exit_code == 65);
    CHECK(run("let f = 1;\nf(2);").exit_code == 70);
    CHECK(run("let x = 1 ? 2 : 3;").exit_code == 65);
}
