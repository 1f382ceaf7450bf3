// SPDX-License-Identifier: Apache-2.0
#include <ila/error.hpp>
#include <ila/policy.hpp>
#include <ila/retrieval.hpp>
#include <ila/text.hpp>

#include <algorithm>
#include <fstream>

namespace ila
{

// ---------------------------------------------------------------- tool specs

std::vector<ToolSpec> tool_specs(bool with_type_lookup)
{
    using nlohmann::json;
    auto string_prop = [](const char* description) { return json{{"type", "string"}, {"description", description}}; };
    auto object = [](json properties, std::vector<std::string> required) {
        return json{{"type", "object"}, {"properties", std::move(properties)}, {"required", std::move(required)}};
    };

    std::vector<ToolSpec> specs;
    specs.push_back(
        {ToolName::ViewStruct,
         "Show the outline of the documentation, or of one section, as an indented list of titles and section ids.",
         object({{"section_id", string_prop("Section to expand; omit for the whole documentation.")},
                 {"depth", {{"type", "integer"}, {"minimum", 1}, {"description", "Levels to show (default 2)."}}}},
                {})});
    specs.push_back({ToolName::ViewDetail,
                     "Read the full text of one documentation section and list its subsections.",
                     object({{"section_id", string_prop("Id taken from ViewStruct or SemSearch output.")}},
                            {"section_id"})});
    specs.push_back({ToolName::SemSearch,
                     "Semantic search over the documentation. Returns the best matching sections for each query.",
                     object({{"queries",
                              {{"type", "array"},
                               {"items", {{"type", "string"}}},
                               {"minItems", 1},
                               {"maxItems", kMaxQueriesPerSearch},
                               {"description", "One to three natural-language queries."}}}},
                            {"queries"})});
    if (with_type_lookup)
        specs.push_back({ToolName::TypeLookup,
                         "Look up a type, class or interface by name and show its documentation and members.",
                         object({{"name", string_prop("Type name, e.g. Array.")}}, {"name"})});
    specs.push_back({ToolName::Execute,
                     "Run an arbitrary program in the target language and see its output. Nothing is graded.",
                     object({{"code", string_prop("Complete program source.")},
                             {"stdin", string_prop("Optional standard input.")}},
                            {"code"})});
    specs.push_back({ToolName::Submit,
                     "Submit your solution. It is checked against the public tests; the task ends when all pass.",
                     object({{"solution", string_prop("Complete solution source.")}}, {"solution"})});
    return specs;
}

std::vector<ToolName> tool_names(std::span<const ToolSpec> tools)
{
    std::vector<ToolName> out;
    for (const auto& t : tools)
        out.push_back(t.name);
    return out;
}

std::string system_prompt()
{
    return "You are solving a programming task in a language you have not seen before. "
           "Its documentation and toolchain are available only through the tools.\n"
           "\n"
           "Work in small steps:\n"
           "- Use ViewStruct to see how the documentation is organised, then ViewDetail to read sections.\n"
           "- Use SemSearch when you know what you need but not where it is documented.\n"
           "- Use TypeLookup, when offered, to read about a specific type.\n"
           "- Use Execute to try out syntax and library calls before relying on them.\n"
           "- Use Submit with a complete solution once you are confident. Failing public tests are reported back.\n"
           "\n"
           "Call exactly one tool per turn. The number of turns is limited.\n";
}

void PolicyConfig::validate() const
{
    if (temperature < 0.0)
        throw ConfigError("temperature must be >= 0");
    if (context_budget_tokens == 0)
        throw ConfigError("context_budget_tokens must be positive");
    if (max_retries < 0)
        throw ConfigError("max_retries must be >= 0");
}

// ---------------------------------------------------------------- chat wire

nlohmann::json ChatMessage::to_json() const
{
    nlohmann::json j = {{"role", role}};
    if (!tool_calls.empty())
    {
        j["content"] = content.empty() ? nlohmann::json(nullptr) : nlohmann::json(content);
        auto calls = nlohmann::json::array();
        for (const auto& c : tool_calls)
            calls.push_back(
                {{"id", c.id}, {"type", "function"}, {"function", {{"name", c.name}, {"arguments", c.arguments}}}});
        j["tool_calls"] = std::move(calls);
    }
    else
        j["content"] = content;
    if (!tool_call_id.empty())
        j["tool_call_id"] = tool_call_id;
    return j;
}

HttpChatProvider::HttpChatProvider(http::Settings settings, std::string model):
    settings_(std::move(settings)), model_(std::move(model))
{
}

void HttpChatProvider::log_requests_to(std::filesystem::path path)
{
    log_path_ = std::move(path);
}

nlohmann::json HttpChatProvider::request_body(const ChatRequest& request, const std::string& model)
{
    nlohmann::json messages = nlohmann::json::array();
    for (const auto& m : request.messages)
        messages.push_back(m.to_json());
    nlohmann::json body = {{"model", model}, {"messages", std::move(messages)}, {"temperature", request.temperature}};
    if (!request.tools.empty())
    {
        nlohmann::json tools = nlohmann::json::array();
        for (const auto& t : request.tools)
            tools.push_back({{"type", "function"},
                             {"function",
                              {{"name", to_string(t.name)}, {"description", t.description}, {"parameters", t.parameters}}}});
        body["tools"] = std::move(tools);
        body["tool_choice"] = "auto";
    }
    return body;
}

ChatResponse HttpChatProvider::parse_response(const nlohmann::json& reply)
{
    try
    {
        const auto& message = reply.at("choices").at(0).at("message");
        ChatResponse r;
        if (message.contains("content") && message["content"].is_string())
            r.content = message["content"].get<std::string>();
        if (message.contains("tool_calls") && message["tool_calls"].is_array())
        {
            for (const auto& c : message["tool_calls"])
            {
                const auto& fn = c.at("function");
                const auto& args = fn.contains("arguments") ? fn["arguments"] : nlohmann::json(nullptr);
                r.tool_calls.push_back({c.value("id", ""), fn.at("name").get<std::string>(),
                                        args.is_string() ? args.get<std::string>() : args.dump()});
            }
        }
        return r;
    }
    catch (const nlohmann::json::exception& e)
    {
        throw TransportError(std::string("malformed chat completion reply: ") + e.what());
    }
}

ChatResponse HttpChatProvider::complete(const ChatRequest& request)
{
    auto body = request_body(request, model_);
    auto settings = settings_;
    settings.max_retries = std::max(settings.max_retries, 0);
    auto reply = http::post_json(settings, body);
    if (log_path_)
    {
        auto line = nlohmann::json{{"request", body}, {"response", reply}}.dump(-1, ' ', false,
                                                                               nlohmann::json::error_handler_t::replace);
        if (!settings_.api_key.empty())
            for (std::size_t pos = 0; (pos = line.find(settings_.api_key, pos)) != std::string::npos;)
                line.replace(pos, settings_.api_key.size(), "[REDACTED]");
        std::lock_guard lock(log_mutex_);
        std::ofstream out(*log_path_, std::ios::app | std::ios::binary);
        out << line << '\n';
    }
    return parse_response(reply);
}

ScriptedChatProvider::ScriptedChatProvider(Responder responder): responder_(std::move(responder)) {}

ScriptedChatProvider::ScriptedChatProvider(std::vector<ChatResponse> responses)
{
    if (responses.empty())
        throw ConfigError("scripted chat provider needs at least one response");
    responder_ = [responses = std::move(responses)](const ChatRequest&, std::size_t i) {
        return responses[std::min(i, responses.size() - 1)];
    };
}

ChatResponse ScriptedChatProvider::complete(const ChatRequest& request)
{
    return responder_(request, calls_++);
}

// ---------------------------------------------------------------- rendering

std::string elision_stub(std::size_t chars)
{
    return "(observation elided, " + std::to_string(chars) + " chars)";
}

std::size_t estimate_tokens(std::span<const ChatMessage> messages)
{
    std::size_t total = 0;
    for (const auto& m : messages)
    {
        total += text::token_estimate(m.content);
        for (const auto& c : m.tool_calls)
            total += text::token_estimate(c.name) + text::token_estimate(c.arguments);
    }
    return total;
}

RenderedState render_state(const AgentState& state, std::size_t budget_tokens, std::size_t keep_recent_pairs)
{
    if (budget_tokens == 0)
        throw ConfigError("context budget must be positive");

    RenderedState r;
    r.messages.push_back({"system", system_prompt(), {}, {}});
    r.messages.push_back({"user", state.query(), {}, {}});

    // Index of each step's observation message.
    std::vector<std::size_t> obs_at;
    for (const auto& step : state.history())
    {
        const auto& a = step.action;
        if (const auto* inv = std::get_if<InvalidArgs>(&a.args))
            r.messages.push_back({"assistant", inv->raw_text.empty() ? "(empty reply)" : inv->raw_text, {}, {}});
        else
        {
            auto id = "call_" + std::to_string(a.turn_index);
            r.messages.push_back({"assistant", {}, {{id, a.label(), a.arguments_json().dump()}}, {}});
        }
        obs_at.push_back(r.messages.size());
        if (a.is_invalid())
            r.messages.push_back({"user", step.observation.text, {}, {}});
        else
            r.messages.push_back({"tool", step.observation.text, {}, "call_" + std::to_string(a.turn_index)});
    }

    r.token_estimate = estimate_tokens(r.messages);
    std::size_t elidable = obs_at.size() > keep_recent_pairs ? obs_at.size() - keep_recent_pairs : 0;
    for (std::size_t i = 0; i < elidable && r.token_estimate > budget_tokens; ++i)
    {
        auto& m = r.messages[obs_at[i]];
        auto stub = elision_stub(text::char_count(m.content));
        if (stub.size() >= m.content.size())
            continue;
        r.token_estimate -= text::token_estimate(m.content);
        m.content = std::move(stub);
        r.token_estimate += text::token_estimate(m.content);
        ++r.elided;
    }
    if (r.token_estimate > budget_tokens)
        throw ContextOverflow("context overflow: " + std::to_string(r.token_estimate) +
                              " estimated tokens exceed the budget of " + std::to_string(budget_tokens));
    return r;
}

Action parse_response(const ChatResponse& response, std::span<const ToolSpec> tools)
{
    std::string raw = response.content;
    for (const auto& c : response.tool_calls)
        raw += (raw.empty() ? "" : "\n") + c.name + "(" + c.arguments + ")";

    if (response.tool_calls.empty())
        return Action::invalid("no tool call in reply", raw);
    if (response.tool_calls.size() > 1)
        return Action::invalid("expected exactly one tool call, got " + std::to_string(response.tool_calls.size()), raw);

    const auto& call = response.tool_calls.front();
    nlohmann::json args;
    try
    {
        args = call.arguments.empty() ? nlohmann::json::object() : nlohmann::json::parse(call.arguments);
    }
    catch (const nlohmann::json::parse_error&)
    {
        if (!tool_from_string(call.name))
            return Action::invalid("unknown tool " + call.name, raw);
        return Action::invalid("arguments for " + call.name + " are not valid JSON", raw);
    }
    return make_action(call.name, args, tool_names(tools), raw);
}

// ---------------------------------------------------------------- policies

namespace
{

bool offers(std::span<const ToolSpec> tools, ToolName name)
{
    return std::any_of(tools.begin(), tools.end(), [&](const ToolSpec& t) { return t.name == name; });
}

} // namespace

LlmPolicy::LlmPolicy(std::shared_ptr<ChatProvider> provider, PolicyConfig config):
    provider_(std::move(provider)), config_(config)
{
    config_.validate();
}

Action LlmPolicy::decide(const AgentState& state, std::span<const ToolSpec> tools)
{
    auto rendered = render_state(state, config_.context_budget_tokens, config_.keep_recent_pairs);
    ChatRequest request{std::move(rendered.messages), {tools.begin(), tools.end()}, config_.temperature};
    return parse_response(provider_->complete(request), tools);
}

ScriptedPolicy::ScriptedPolicy(std::vector<Action> script): script_(std::move(script)) {}

Action ScriptedPolicy::decide(const AgentState&, std::span<const ToolSpec> tools)
{
    if (next_ >= script_.size())
        return Action::invalid("scripted policy exhausted");
    auto a = script_[next_++];
    if (auto t = a.tool(); t && !offers(tools, *t))
        return Action::invalid("unknown tool " + a.label(), a.arguments_json().dump());
    return a;
}

RandomPolicy::RandomPolicy(std::vector<Action> pool, std::uint64_t seed): pool_(std::move(pool)), rng_(seed)
{
    if (pool_.empty())
        throw ConfigError("random policy needs a non-empty action pool");
}

Action RandomPolicy::decide(const AgentState&, std::span<const ToolSpec> tools)
{
    // Raw engine output keeps the draw sequence identical across standard libraries.
    auto a = pool_[static_cast<std::size_t>(rng_() % pool_.size())];
    if (auto t = a.tool(); t && !offers(tools, *t))
        return Action::invalid("unknown tool " + a.label(), a.arguments_json().dump());
    return a;
}

} // namespace ila
