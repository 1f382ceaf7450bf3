// SPDX-License-Identifier: Apache-2.0
#include "../support/mock_server.hpp"
#include "../support/support.hpp"

#include <ila/error.hpp>
#include <ila/policy.hpp>
#include <ila/text.hpp>

#include <nlohmann/json.hpp>

#include <catch_amalgamated.hpp>

using namespace ila;
using namespace ila::testing;
using nlohmann::json;

namespace
{

const std::vector<ToolName> kAll(std::begin(kAllTools), std::end(kAllTools));

ChatResponse call(std::string name, std::string args)
{
    ChatResponse r;
    r.tool_calls.push_back({"c1", std::move(name), std::move(args)});
    return r;
}

Step step(int turn, std::string observation)
{
    auto a = make_action("ViewStruct", json::object(), kAll);
    a.turn_index = turn;
    return {a, {ObservationKind::ToolResult, "ViewStruct", std::move(observation)}};
}

std::size_t stubs(const RenderedState& r)
{
    std::size_t n = 0;
    for (const auto& m : r.messages)
        n += m.content.rfind("(observation elided, ", 0) == 0;
    return n;
}

} // namespace

TEST_CASE("tool specs")
{
    auto with = tool_specs(true);
    auto without = tool_specs(false);
    CHECK(with.size() == 6);
    CHECK(without.size() == 5);
    for (const auto& t : without)
        CHECK(t.name != ToolName::TypeLookup);
    for (const auto& t : with)
    {
        CHECK_FALSE(t.description.empty());
        CHECK(t.parameters.at("type") == "object");
    }
    auto sem = std::find_if(with.begin(), with.end(), [](const ToolSpec& t) { return t.name == ToolName::SemSearch; });
    CHECK(sem->parameters["properties"]["queries"]["maxItems"] == 3);
    CHECK_FALSE(system_prompt().empty());
}

TEST_CASE("policy config validation")
{
    PolicyConfig c;
    CHECK(c.temperature == 1.0);
    CHECK(c.context_budget_tokens == 128000);
    c.validate();
    c.temperature = -0.1;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c.temperature = 0;
    c.context_budget_tokens = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("parse_response validation")
{
    auto tools = tool_specs(true);

    auto ok = parse_response(call("ViewDetail", R"({"section_id": "class-str"})"), tools);
    REQUIRE_FALSE(ok.is_invalid());
    CHECK(std::get<ViewDetailArgs>(ok.args).section_id == "class-str");

    auto foo = parse_response(call("Foo", "{}"), tools);
    REQUIRE(foo.is_invalid());
    CHECK(std::get<InvalidArgs>(foo.args).reason == "unknown tool Foo");

    auto four = parse_response(call("SemSearch", R"({"queries": ["a", "b", "c", "d"]})"), tools);
    REQUIRE(four.is_invalid());
    CHECK(std::get<InvalidArgs>(four.args).reason.find("at most 3") != std::string::npos);

    auto bad_json = parse_response(call("Submit", "{oops"), tools);
    REQUIRE(bad_json.is_invalid());
    CHECK(std::get<InvalidArgs>(bad_json.args).reason.find("not valid JSON") != std::string::npos);
    CHECK(std::get<InvalidArgs>(bad_json.args).raw_text.find("{oops") != std::string::npos);

    ChatResponse text_only;
    text_only.content = "I think the answer is\n```\nprint(1);\n```";
    auto none = parse_response(text_only, tools);
    REQUIRE(none.is_invalid());
    CHECK(std::get<InvalidArgs>(none.args).reason == "no tool call in reply");
    CHECK(std::get<InvalidArgs>(none.args).raw_text == text_only.content);

    ChatResponse two = call("ViewStruct", "{}");
    two.tool_calls.push_back({"c2", "ViewStruct", "{}"});
    auto parallel = parse_response(two, tools);
    REQUIRE(parallel.is_invalid());
    CHECK(std::get<InvalidArgs>(parallel.args).reason == "expected exactly one tool call, got 2");

    auto unoffered = parse_response(call("TypeLookup", R"({"name": "Str"})"), tool_specs(false));
    CHECK(unoffered.is_invalid());

    auto missing = parse_response(call("Execute", "{}"), tools);
    CHECK(missing.is_invalid());
}

TEST_CASE("argument schemas")
{
    auto vs = make_action("ViewStruct", json{{"section_id", "a"}, {"depth", 3}}, kAll);
    REQUIRE_FALSE(vs.is_invalid());
    CHECK(std::get<ViewStructArgs>(vs.args).depth == 3);
    CHECK(make_action("ViewStruct", json{{"depth", 0}}, kAll).is_invalid());
    CHECK(make_action("ViewStruct", json{{"depth", "2"}}, kAll).is_invalid());
    CHECK(make_action("SemSearch", json{{"queries", json::array()}}, kAll).is_invalid());
    CHECK(make_action("SemSearch", json{{"queries", {1}}}, kAll).is_invalid());
    CHECK(make_action("Submit", json::array(), kAll).is_invalid());
    auto ex = make_action("Execute", json{{"code", "print(1);"}, {"stdin", "x"}}, kAll);
    REQUIRE_FALSE(ex.is_invalid());
    CHECK(std::get<ExecuteArgs>(ex.args).stdin_text == "x");
}

TEST_CASE("actions round-trip through their log form")
{
    for (const auto& a : {make_action("ViewStruct", json::object(), kAll),
                          make_action("ViewDetail", json{{"section_id", "x/y"}}, kAll),
                          make_action("SemSearch", json{{"queries", {"a", "b"}}}, kAll),
                          make_action("TypeLookup", json{{"name", "Str"}}, kAll),
                          make_action("Execute", json{{"code", "print(1);"}}, kAll),
                          make_action("Submit", json{{"solution", "s"}}, kAll), Action::invalid("why", "raw")})
    {
        auto back = action_from_log(a.label(), a.arguments_json());
        CHECK(back == a);
    }
}

TEST_CASE("render_state of a short state is verbatim")
{
    AgentState s("Write a program.");
    s.append(step(0, "outline text"));
    auto r = render_state(s, 100000);
    REQUIRE(r.messages.size() == 4);
    CHECK(r.messages[0].role == "system");
    CHECK(r.messages[1].content == "Write a program.");
    CHECK(r.messages[2].role == "assistant");
    REQUIRE(r.messages[2].tool_calls.size() == 1);
    CHECK(r.messages[2].tool_calls[0].name == "ViewStruct");
    CHECK(r.messages[3].role == "tool");
    CHECK(r.messages[3].tool_call_id == r.messages[2].tool_calls[0].id);
    CHECK(r.messages[3].content == "outline text");
    CHECK(r.elided == 0);
    CHECK(r.token_estimate == estimate_tokens(r.messages));
}

TEST_CASE("invalid actions render as assistant text plus a user correction")
{
    AgentState s("Q");
    auto inv = Action::invalid("no tool call in reply", "just prose");
    s.append({inv, {ObservationKind::Error, "invalid", "Invalid action: no tool call in reply."}});
    auto r = render_state(s, 100000);
    REQUIRE(r.messages.size() == 4);
    CHECK(r.messages[2].role == "assistant");
    CHECK(r.messages[2].content == "just prose");
    CHECK(r.messages[2].tool_calls.empty());
    CHECK(r.messages[3].role == "user");
}

TEST_CASE("oldest observations are elided first")
{
    AgentState s("Q");
    for (int i = 0; i < 10; ++i)
        s.append(step(i, std::string(4000, static_cast<char>('a' + i))));
    // Room for the frame, three full observations and seven stubs.
    auto r = render_state(s, 3 * 1000 + 1200);
    CHECK(r.elided == 7);
    CHECK(stubs(r) == 7);
    // newest three intact, oldest seven stubbed
    std::vector<std::string> tool_texts;
    for (const auto& m : r.messages)
        if (m.role == "tool")
            tool_texts.push_back(m.content);
    REQUIRE(tool_texts.size() == 10);
    for (int i = 0; i < 7; ++i)
        CHECK(tool_texts[i] == elision_stub(4000));
    for (int i = 7; i < 10; ++i)
        CHECK(tool_texts[i] == std::string(4000, static_cast<char>('a' + i)));
    CHECK(r.messages[1].content == "Q");
    CHECK(r.token_estimate <= 4200);

    auto again = render_state(s, 4200);
    REQUIRE(again.messages.size() == r.messages.size());
    for (std::size_t i = 0; i < r.messages.size(); ++i)
        CHECK(again.messages[i].to_json() == r.messages[i].to_json());
}

TEST_CASE("unelidable content over budget is a context overflow")
{
    AgentState s(std::string(10000, 'q'));
    CHECK_THROWS_AS(render_state(s, 100), ContextOverflow);
    try
    {
        render_state(s, 100);
    }
    catch (const ContextOverflow& e)
    {
        CHECK(std::string(e.what()).find("context overflow") != std::string::npos);
    }
    CHECK_THROWS_AS(render_state(s, 0), ConfigError);
}

TEST_CASE("scripted policy replays then reports exhaustion")
{
    ScriptedPolicy p({make_action("ViewStruct", json::object(), kAll),
                      make_action("Submit", json{{"solution", "ok"}}, kAll)});
    AgentState s("Q");
    auto tools = tool_specs(true);
    CHECK(p.decide(s, tools).tool() == ToolName::ViewStruct);
    CHECK(p.decide(s, tools).tool() == ToolName::Submit);
    auto done = p.decide(s, tools);
    REQUIRE(done.is_invalid());
    CHECK(std::get<InvalidArgs>(done.args).reason == "scripted policy exhausted");
}

TEST_CASE("scripted policy never emits unoffered tools")
{
    ScriptedPolicy p({make_action("TypeLookup", json{{"name", "Str"}}, kAll)});
    AgentState s("Q");
    auto a = p.decide(s, tool_specs(false));
    CHECK(a.is_invalid());
}

TEST_CASE("random policy is reproducible per seed")
{
    std::vector<Action> pool{make_action("ViewStruct", json::object(), kAll),
                             make_action("TypeLookup", json{{"name", "Str"}}, kAll),
                             make_action("Submit", json{{"solution", "x"}}, kAll)};
    auto draw = [&](std::uint64_t seed, bool types) {
        RandomPolicy p(pool, seed);
        AgentState s("Q");
        auto tools = tool_specs(types);
        std::vector<std::string> labels;
        for (int i = 0; i < 50; ++i)
            labels.push_back(p.decide(s, tools).label());
        return labels;
    };
    CHECK(draw(1, true) == draw(1, true));
    CHECK(draw(1, true) != draw(2, true));
    for (const auto& l : draw(3, false))
        CHECK(l != "TypeLookup");
    CHECK_THROWS_AS(RandomPolicy({}, 1), ConfigError);
}

TEST_CASE("llm policy sends the rendered state and tools")
{
    ChatRequest seen;
    auto provider = std::make_shared<ScriptedChatProvider>([&](const ChatRequest& req, std::size_t) {
        seen = req;
        return call("ViewStruct", "{}");
    });
    PolicyConfig cfg;
    cfg.temperature = 0.25;
    LlmPolicy p(provider, cfg);
    AgentState s("the query");
    auto tools = tool_specs(false);
    auto a = p.decide(s, tools);
    CHECK(a.tool() == ToolName::ViewStruct);
    CHECK(provider->calls() == 1);
    CHECK(seen.temperature == 0.25);
    CHECK(seen.tools.size() == 5);
    CHECK(seen.messages.at(1).content == "the query");
}

TEST_CASE("http chat provider wire format")
{
    json received;
    std::string auth;
    MockServer server("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
        received = json::parse(req.body);
        auth = req.get_header_value("Authorization");
        json reply = {{"choices",
                       {{{"message",
                          {{"role", "assistant"},
                           {"content", "echo " + auth},
                           {"tool_calls",
                            {{{"id", "call_9"},
                              {"type", "function"},
                              {"function", {{"name", "TypeLookup"}, {"arguments", R"({"name":"Str"})"}}}}}}}}}}}};
        res.set_content(reply.dump(), "application/json");
    });
    http::Settings s;
    s.url = server.url();
    s.api_key = "sk-test-secret-123";
    HttpChatProvider provider(s, "test-model");
    TempDir dir;
    provider.log_requests_to(dir / "requests.jsonl");

    ChatRequest req{{{"system", "sys", {}, {}}, {"user", "hi", {}, {}}}, tool_specs(true), 1.0};
    auto resp = provider.complete(req);
    REQUIRE(resp.tool_calls.size() == 1);
    CHECK(resp.tool_calls[0].name == "TypeLookup");
    CHECK(resp.tool_calls[0].arguments == R"({"name":"Str"})");
    CHECK(auth == "Bearer sk-test-secret-123");

    CHECK(received["model"] == "test-model");
    CHECK(received["temperature"] == 1.0);
    CHECK(received["messages"].size() == 2);
    CHECK(received["tools"].size() == 6);
    CHECK(received["tools"][0]["type"] == "function");

    auto log = read(dir / "requests.jsonl");
    CHECK(log.find("sk-test-secret-123") == std::string::npos);
    CHECK(log.find("[REDACTED]") != std::string::npos);
}

TEST_CASE("http chat provider failures are transport errors")
{
    MockServer bad("/chat", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"({"unexpected": true})", "application/json");
    });
    http::Settings s;
    s.url = bad.url();
    s.backoff = std::chrono::milliseconds(1);
    HttpChatProvider provider(s, "m");
    ChatRequest req{{{"user", "hi", {}, {}}}, {}, 1.0};
    CHECK_THROWS_AS(provider.complete(req), TransportError);

    MockServer client_error("/chat", [](const httplib::Request&, httplib::Response& res) { res.status = 400; });
    s.url = client_error.url();
    HttpChatProvider p2(s, "m");
    CHECK_THROWS_AS(p2.complete(req), TransportError);
    CHECK(client_error.hits() == 1);  // 4xx is not retried

    s.url = "http://127.0.0.1:1/chat";
    s.max_retries = 1;
    HttpChatProvider unreachable(s, "m");
    CHECK_THROWS_AS(unreachable.complete(req), TransportError);
}
