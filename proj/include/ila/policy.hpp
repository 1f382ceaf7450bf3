// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <ila/action.hpp>
#include <ila/http.hpp>

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace ila
{

struct ToolSpec
{
    ToolName name;
    std::string description;
    /// JSON Schema of the arguments object.
    nlohmann::json parameters;
};

/// The action space for one run. TypeLookup is included only when a type
/// index is available.
std::vector<ToolSpec> tool_specs(bool with_type_lookup);
std::vector<ToolName> tool_names(std::span<const ToolSpec> tools);

/// Version tag of the bundled system prompt; bump when the text changes.
inline constexpr std::string_view kSystemPromptVersion = "ila-system-v1";
std::string system_prompt();

struct PolicyConfig
{
    double temperature = 1.0;
    std::size_t context_budget_tokens = 128000;
    int max_retries = 3;
    /// Action-observation pairs that are never elided.
    std::size_t keep_recent_pairs = 3;

    void validate() const;
};

// ---------------------------------------------------------------- chat wire types

struct ToolCall
{
    std::string id;
    std::string name;
    /// Raw JSON text as produced by the model.
    std::string arguments;
};

struct ChatMessage
{
    std::string role;
    std::string content;
    std::vector<ToolCall> tool_calls;  // assistant only
    std::string tool_call_id;          // tool only

    nlohmann::json to_json() const;
};

struct ChatRequest
{
    std::vector<ChatMessage> messages;
    std::vector<ToolSpec> tools;
    double temperature = 1.0;
};

struct ChatResponse
{
    std::string content;
    std::vector<ToolCall> tool_calls;
};

/// A chat-completion endpoint. Implementations throw TransportError when
/// the endpoint cannot produce a reply.
class ChatProvider
{
public:
    virtual ~ChatProvider() = default;
    virtual ChatResponse complete(const ChatRequest& request) = 0;
};

/// Chat-completions over HTTP:
/// {"model", "messages", "temperature", "tools": [{"type": "function", ...}]}
/// -> {"choices": [{"message": {"content", "tool_calls"}}]}.
class HttpChatProvider final: public ChatProvider
{
public:
    HttpChatProvider(http::Settings settings, std::string model);

    /// Appends every request/response pair to `path` as JSONL, with the API
    /// key redacted.
    void log_requests_to(std::filesystem::path path);

    ChatResponse complete(const ChatRequest& request) override;

    static nlohmann::json request_body(const ChatRequest& request, const std::string& model);
    static ChatResponse parse_response(const nlohmann::json& reply);

private:
    http::Settings settings_;
    std::string model_;
    std::optional<std::filesystem::path> log_path_;
    std::mutex log_mutex_;
};

/// Replies computed by a function; for hermetic tests and scripted runs.
class ScriptedChatProvider final: public ChatProvider
{
public:
    using Responder = std::function<ChatResponse(const ChatRequest&, std::size_t call_index)>;

    explicit ScriptedChatProvider(Responder responder);
    /// Replays `responses` in order, repeating the last one when exhausted.
    explicit ScriptedChatProvider(std::vector<ChatResponse> responses);

    ChatResponse complete(const ChatRequest& request) override;
    std::size_t calls() const { return calls_; }

private:
    Responder responder_;
    std::size_t calls_ = 0;
};

// ---------------------------------------------------------------- rendering

struct RenderedState
{
    std::vector<ChatMessage> messages;
    std::size_t token_estimate = 0;
    std::size_t elided = 0;
};

/// chars/4 estimate over every message's content and tool-call arguments.
std::size_t estimate_tokens(std::span<const ChatMessage> messages);

/// System prompt, query, then each step as an assistant tool call plus the
/// tool reply (invalid actions render as the raw assistant text followed by
/// an error message). While over budget, the oldest observations become
/// "(observation elided, N chars)". Throws ContextOverflow when even that
/// does not fit.
RenderedState render_state(const AgentState& state, std::size_t budget_tokens, std::size_t keep_recent_pairs = 3);

std::string elision_stub(std::size_t chars);

/// Maps a chat reply to an action: exactly one call to an offered tool with
/// schema-valid arguments, else an InvalidAction carrying the raw text.
Action parse_response(const ChatResponse& response, std::span<const ToolSpec> tools);

// ---------------------------------------------------------------- policies

class Policy
{
public:
    virtual ~Policy() = default;
    /// Chooses the next action. Throws TransportError or ContextOverflow on
    /// failures that end the trajectory.
    virtual Action decide(const AgentState& state, std::span<const ToolSpec> tools) = 0;
};

class LlmPolicy final: public Policy
{
public:
    LlmPolicy(std::shared_ptr<ChatProvider> provider, PolicyConfig config = {});

    Action decide(const AgentState& state, std::span<const ToolSpec> tools) override;

private:
    std::shared_ptr<ChatProvider> provider_;
    PolicyConfig config_;
};

/// Replays a fixed list of actions; once exhausted every decision is an
/// InvalidAction.
class ScriptedPolicy final: public Policy
{
public:
    explicit ScriptedPolicy(std::vector<Action> script);

    Action decide(const AgentState& state, std::span<const ToolSpec> tools) override;

private:
    std::vector<Action> script_;
    std::size_t next_ = 0;
};

/// Draws each action uniformly from a pool with a seeded mt19937_64.
/// Actions for tools not offered are returned as InvalidAction.
class RandomPolicy final: public Policy
{
public:
    RandomPolicy(std::vector<Action> pool, std::uint64_t seed);

    Action decide(const AgentState& state, std::span<const ToolSpec> tools) override;

private:
    std::vector<Action> pool_;
    std::mt19937_64 rng_;
};

} // namespace ila
