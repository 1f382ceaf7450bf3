// SPDX-License-Identifier: Apache-2.0
#include "../support/support.hpp"

#include <ila/agent.hpp>
#include <ila/error.hpp>
#include <ila/text.hpp>

#include <nlohmann/json.hpp>

#include <catch_amalgamated.hpp>

using namespace ila;
using namespace ila::testing;
using nlohmann::json;

namespace
{

const std::vector<ToolName> kAll(std::begin(kAllTools), std::end(kAllTools));

Action act(std::string_view tool, json args = json::object())
{
    auto a = make_action(tool, args, kAll);
    REQUIRE_FALSE(a.is_invalid());
    return a;
}

/// Policy that always throws, standing in for an unreachable provider.
class FailingPolicy final: public Policy
{
public:
    Action decide(const AgentState&, std::span<const ToolSpec>) override { throw TransportError("connection refused"); }
};

const std::string kWrongFactorial = "fn factorial(n) {\n    return n;\n}\n";

} // namespace

TEST_CASE("single correct submit ends the trajectory")
{
    auto& f = fixture();
    const auto& p = f.problem("rep-01-factorial");
    ScriptedPolicy policy({act("Submit", {{"solution", *p.reference_solution}})});
    auto t = run_trajectory(make_task(p), f.resources(), policy, {});
    REQUIRE(t.steps.size() == 1);
    CHECK(t.terminal_reason == TerminalReason::SubmitPass);
    CHECK(t.final_solution == *p.reference_solution);
}

TEST_CASE("budget exhaustion after max_turns")
{
    auto& f = fixture();
    const auto& p = f.problem("gen-02-word-count");
    std::vector<Action> script(20, act("ViewStruct"));
    ScriptedPolicy policy(script);
    auto t = run_trajectory(make_task(p), f.resources(), policy, {});
    CHECK(t.steps.size() == 15);
    CHECK(t.terminal_reason == TerminalReason::BudgetExhausted);
    CHECK(t.final_solution.empty());
    for (std::size_t i = 0; i < t.steps.size(); ++i)
        CHECK(t.steps[i].action.turn_index == static_cast<int>(i));
}

TEST_CASE("exploration then a wrong and a right submit")
{
    auto& f = fixture();
    const auto& p = f.problem("rep-01-factorial");
    ScriptedPolicy policy({act("Execute", {{"code", "print(1"}}),
                           act("SemSearch", {{"queries", {"range loop"}}}),
                           act("Submit", {{"solution", kWrongFactorial}}),
                           act("Submit", {{"solution", *p.reference_solution}})});
    auto t = run_trajectory(make_task(p), f.resources(), policy, {});
    REQUIRE(t.steps.size() == 4);
    CHECK(t.terminal_reason == TerminalReason::SubmitPass);
    CHECK(t.final_solution == *p.reference_solution);
    CHECK(t.steps[0].observation.text.find("parse error") != std::string::npos);
    CHECK(t.steps[2].observation.text.find("FAIL p1") != std::string::npos);
}

TEST_CASE("provider failures end the trajectory with an empty solution")
{
    auto& f = fixture();
    FailingPolicy policy;
    auto t = run_trajectory(make_task(f.problem("gen-01-fizzbuzz")), f.resources(), policy, {});
    CHECK(t.terminal_reason == TerminalReason::ProviderError);
    CHECK(t.steps.empty());
    CHECK(t.final_solution.empty());
    CHECK(t.error.find("connection refused") != std::string::npos);
}

TEST_CASE("final solution fallback order")
{
    Step submit{act("Submit", {{"solution", "A"}}), {}};
    Step invalid{Action::invalid("no tool call in reply", "text\n```\nB\n```\n"), {}};
    Step view{act("ViewStruct"), {}};
    CHECK(final_solution_of({submit, invalid}) == "A");
    CHECK(final_solution_of({invalid, view}) == "B\n");
    CHECK(final_solution_of({view}).empty());
}

TEST_CASE("dispatch passes documentation views through")
{
    auto& f = fixture();
    auto res = f.resources();
    auto task = make_task(f.problem("gen-01-fizzbuzz"));
    AgentConfig cfg;
    auto o = dispatch(act("ViewStruct"), res, task, cfg);
    CHECK(o.kind == ObservationKind::ToolResult);
    CHECK(o.produced_by == "ViewStruct");
    CHECK(o.text == text::truncate(f.docs.view_struct(std::nullopt, 2).text, cfg.max_observation_chars));

    auto miss = dispatch(act("ViewDetail", {{"section_id", "nope"}}), res, task, cfg);
    CHECK(miss.kind == ObservationKind::Miss);
    CHECK(miss.text == section_not_found("nope"));
}

TEST_CASE("dispatch reports invalid actions as errors")
{
    auto& f = fixture();
    auto o = dispatch(Action::invalid("unknown tool Foo"), f.resources(), make_task(f.problem("gen-01-fizzbuzz")), {});
    CHECK(o.kind == ObservationKind::Error);
    CHECK(o.produced_by == "invalid");
    CHECK(o.text.find("Foo") != std::string::npos);
}

TEST_CASE("TypeLookup is offered only with a type index")
{
    auto& f = fixture();
    CHECK(tools_for(f.resources(true)).size() == 6);
    CHECK(tools_for(f.resources(false)).size() == 5);

    ScriptedPolicy policy({act("TypeLookup", {{"name", "Str"}})});
    AgentConfig cfg;
    cfg.max_turns = 1;
    auto t = run_trajectory(make_task(f.problem("gen-01-fizzbuzz")), f.resources(false), policy, cfg);
    REQUIRE(t.steps.size() == 1);
    CHECK(t.steps[0].action.is_invalid());
    CHECK(t.steps[0].observation.kind == ObservationKind::Error);
}

TEST_CASE("observations are capped")
{
    auto& f = fixture();
    AgentConfig cfg;
    cfg.max_observation_chars = 50;
    auto o = dispatch(act("ViewStruct", {{"depth", 5}}), f.resources(), make_task(f.problem("gen-01-fizzbuzz")), cfg);
    CHECK(text::char_count(o.text) <= 50 + text::char_count(text::kTruncationMarker));
    CHECK(o.text.find(text::kTruncationMarker) != std::string::npos);
}

TEST_CASE("observations equal independently computed tool outputs")
{
    auto& f = fixture();
    auto res = f.resources();
    const auto& p = f.problem("tr-04-dedupe");
    auto task = make_task(p);
    AgentConfig cfg;
    std::vector<Action> script{act("ViewStruct", {{"depth", 1}}),
                               act("ViewDetail", {{"section_id", "class-map"}}),
                               act("ViewStruct", {{"section_id", "class-map"}}),
                               act("SemSearch", {{"queries", {"map has key", "array push"}}}),
                               act("TypeLookup", {{"name", "Dict"}}),
                               act("TypeLookup", {{"name", "Sett"}}),
                               act("Execute", {{"code", "let m = map();\nm.set(1, true);\nprint(m.has(1));\n"}}),
                               act("Execute", {{"code", "print(read_line());\n"}, {"stdin", "hello\n"}}),
                               act("Submit", {{"solution", "fn dedupe(xs) {\n    return xs;\n}\n"}}),
                               act("Submit", {{"solution", *p.reference_solution}})};
    ScriptedPolicy policy(script);
    auto t = run_trajectory(task, res, policy, cfg);
    REQUIRE(t.steps.size() == 10);
    CHECK(t.terminal_reason == TerminalReason::SubmitPass);

    auto cap = [&](const std::string& s) { return text::truncate(text::sanitize_utf8(s), cfg.max_observation_chars); };
    CHECK(t.steps[0].observation.text == cap(f.docs.view_struct(std::nullopt, 1).text));
    CHECK(t.steps[1].observation.text == cap(f.docs.view_detail("class-map").text));
    CHECK(t.steps[2].observation.text == cap(f.docs.view_struct("class-map", 2).text));

    std::vector<std::string> queries{"map has key", "array push"};
    auto hits = sem_search(f.index, f.embedder, queries, cfg.k);
    for (std::size_t q = 0; q < 2; ++q)
        for (std::size_t i = 0; i < hits.per_query[q].size(); ++i)
        {
            const auto& h = hits.per_query[q][i];
            auto line = "  " + std::to_string(i + 1) + ". [" + h.chunk_id + "] score " + text::format_score(h.score);
            CHECK(t.steps[3].observation.text.find(line) != std::string::npos);
        }
    for (const auto& h : hits.merged)
        CHECK(t.steps[3].observation.text.find(f.docs.chunk(h.chunk_id)->text) != std::string::npos);

    CHECK(t.steps[4].observation.text == cap(f.types.lookup(f.docs, "Dict").text));
    CHECK(t.steps[5].observation.kind == ObservationKind::Miss);
    CHECK(t.steps[5].observation.text == cap(f.types.lookup(f.docs, "Sett").text));

    CHECK(t.steps[6].observation.text.find("stdout:\ntrue\n") != std::string::npos);
    CHECK(t.steps[7].observation.text.find("stdout:\nhello\n") != std::string::npos);

    auto wrong = f.sandbox.submit("fn dedupe(xs) {\n    return xs;\n}\n", task.public_tests);
    CHECK(t.steps[8].observation.text.find("public tests passed: " + std::to_string(wrong.passed_count()) + "/2") !=
          std::string::npos);
    CHECK(t.steps[9].observation.text.find("public tests passed: 2/2") != std::string::npos);
}

TEST_CASE("replay reproduces observations byte for byte")
{
    auto& f = fixture();
    auto res = f.resources();
    const auto& p = f.problem("rep-03-binary-search");
    auto task = make_task(p);
    ScriptedPolicy policy({act("ViewStruct"), act("SemSearch", {{"queries", {"while loop"}}}),
                           act("Execute", {{"code", "print(7 / 2);\n"}}), act("Submit", {{"solution", *p.source_code}}),
                           Action::invalid("no tool call in reply", "hmm"),
                           act("Submit", {{"solution", *p.reference_solution}})});
    auto t = run_trajectory(task, res, policy, {});
    auto logged = Trajectory::from_json(json::parse(t.to_json().dump()));
    auto r = replay(logged, task, res, {});
    CHECK(r.mismatched_turns.empty());
    CHECK(r.replayed.to_json() == t.to_json());

    logged.steps[0].observation.text = "tampered";
    CHECK(replay(logged, task, res, {}).mismatched_turns == std::vector<int>{0});
}

TEST_CASE("trajectory serialization")
{
    auto& f = fixture();
    ScriptedPolicy policy({act("ViewStruct")});
    AgentConfig cfg;
    cfg.max_turns = 2;
    auto t = run_trajectory(make_task(f.problem("gen-03-palindrome")), f.resources(), policy, cfg);
    t.accepted = false;
    t.compiled = false;
    auto j = t.to_json();
    CHECK(j["schema_version"] == kTrajectorySchemaVersion);
    CHECK(j["mode"] == "ila-agent");
    CHECK(j["terminal_reason"] == "budget-exhausted");
    CHECK(j["steps"].size() == 2);
    CHECK(j["steps"][1]["tool"] == "invalid");
    CHECK_FALSE(j.contains("wall_time_ms"));
    auto back = Trajectory::from_json(j);
    CHECK(back.to_json() == j);

    CHECK_THROWS_AS(Trajectory::from_json(json{{"steps", 3}}), LoadError);
    auto bad = j;
    bad["terminal_reason"] = "gave-up";
    CHECK_THROWS_AS(Trajectory::from_json(bad), LoadError);
}

TEST_CASE("no observation leaks private tests")
{
    auto& f = fixture();
    for (const auto& p : f.problems)
    {
        ScriptedPolicy policy({act("Submit", {{"solution", "print(1);\n"}}), act("Submit", {{"solution", ""}}),
                               act("Submit", {{"solution", p.source_code.value_or("x")}}),
                               act("Submit", {{"solution", *p.reference_solution}})});
        auto t = run_trajectory(make_task(p), f.resources(), policy, {});
        CHECK(t.to_json().dump().find("PRIVATE-SENTINEL") == std::string::npos);
    }
}

TEST_CASE("agent config validation")
{
    AgentConfig c;
    CHECK(c.max_turns == 15);
    CHECK(c.k == 5);
    c.max_turns = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
}
