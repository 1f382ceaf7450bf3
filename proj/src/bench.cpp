// SPDX-License-Identifier: Apache-2.0
#include <ila/bench.hpp>
#include <ila/error.hpp>
#include <ila/text.hpp>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace ila
{

std::string_view to_string(TaskKind kind)
{
    switch (kind)
    {
    case TaskKind::Generate: return "generate";
    case TaskKind::Translate: return "translate";
    case TaskKind::Repair: return "repair";
    }
    return "?";
}

std::optional<TaskKind> task_kind_from_string(std::string_view s)
{
    for (auto k : {TaskKind::Generate, TaskKind::Translate, TaskKind::Repair})
        if (to_string(k) == s)
            return k;
    return std::nullopt;
}

std::string_view to_string(Mode mode)
{
    switch (mode)
    {
    case Mode::ZeroShot: return "zero-shot";
    case Mode::SingleRag: return "single-rag";
    case Mode::IterativeRag: return "iterative-rag";
    case Mode::IlaAgent: return "ila-agent";
    }
    return "?";
}

std::optional<Mode> mode_from_string(std::string_view s)
{
    for (auto m : {Mode::ZeroShot, Mode::SingleRag, Mode::IterativeRag, Mode::IlaAgent})
        if (to_string(m) == s)
            return m;
    return std::nullopt;
}

// ---------------------------------------------------------------- problems

namespace
{

struct FieldError
{
    std::string field;
    std::string message;
};

std::string string_field(const nlohmann::json& j, const char* name, bool required)
{
    auto it = j.find(name);
    if (it == j.end() || it->is_null())
    {
        if (required)
            throw FieldError{name, "missing"};
        return {};
    }
    if (!it->is_string())
        throw FieldError{name, "must be a string"};
    return it->get<std::string>();
}

std::optional<std::string> optional_string(const nlohmann::json& j, const char* name)
{
    if (!j.contains(name) || j[name].is_null())
        return std::nullopt;
    return string_field(j, name, true);
}

std::vector<TestSpec> suite_field(const nlohmann::json& j, const char* name)
{
    auto it = j.find(name);
    if (it == j.end() || it->is_null())
        throw FieldError{name, "missing"};
    if (!it->is_array() || it->empty())
        throw FieldError{name, "must be a non-empty array of tests"};
    std::vector<TestSpec> suite;
    std::set<std::string> ids;
    for (std::size_t i = 0; i < it->size(); ++i)
    {
        auto where = std::string(name) + "[" + std::to_string(i) + "]";
        try
        {
            suite.push_back(TestSpec::from_json((*it)[i]));
        }
        catch (const nlohmann::json::exception& e)
        {
            throw FieldError{where, e.what()};
        }
        if (!ids.insert(suite.back().test_id).second)
            throw FieldError{where, "duplicate test_id '" + suite.back().test_id + "'"};
    }
    return suite;
}

Problem parse_problem(const nlohmann::json& j)
{
    if (!j.is_object())
        throw FieldError{"(root)", "must be a JSON object"};
    Problem p;
    p.id = string_field(j, "id", true);
    if (p.id.empty())
        throw FieldError{"id", "must not be empty"};
    auto kind = string_field(j, "task_kind", true);
    auto parsed = task_kind_from_string(kind);
    if (!parsed)
        throw FieldError{"task_kind", "unknown kind '" + kind + "'"};
    p.kind = *parsed;
    p.prompt = string_field(j, "prompt", true);
    p.source_code = optional_string(j, "source_code");
    p.signature = optional_string(j, "signature");
    p.symptom = optional_string(j, "symptom");
    p.reference_solution = optional_string(j, "reference_solution");
    p.public_tests = suite_field(j, "public_tests");
    p.private_tests = suite_field(j, "private_tests");
    if ((p.kind == TaskKind::Translate || p.kind == TaskKind::Repair) && !p.source_code)
        throw FieldError{"source_code", "required for " + kind + " problems"};
    return p;
}

} // namespace

Problem Problem::from_json(const nlohmann::json& j)
{
    try
    {
        return parse_problem(j);
    }
    catch (const FieldError& e)
    {
        throw LoadError("field '" + e.field + "': " + e.message);
    }
}

nlohmann::json Problem::to_json() const
{
    nlohmann::json j = {{"id", id}, {"task_kind", to_string(kind)}, {"prompt", prompt}};
    if (source_code)
        j["source_code"] = *source_code;
    if (signature)
        j["signature"] = *signature;
    if (symptom)
        j["symptom"] = *symptom;
    if (reference_solution)
        j["reference_solution"] = *reference_solution;
    j["public_tests"] = nlohmann::json::array();
    for (const auto& t : public_tests)
        j["public_tests"].push_back(t.to_json());
    j["private_tests"] = nlohmann::json::array();
    for (const auto& t : private_tests)
        j["private_tests"].push_back(t.to_json());
    return j;
}

std::vector<Problem> load_problems(const std::filesystem::path& path)
{
    namespace fs = std::filesystem;
    std::vector<std::pair<std::string, std::string>> sources;  // (location, json text)

    auto read_file = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        if (!in)
            throw LoadError("cannot read problem file " + p.string());
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };

    if (fs::is_directory(path))
    {
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(path))
            if (entry.is_regular_file() && entry.path().extension() == ".json")
                files.push_back(entry.path());
        std::sort(files.begin(), files.end());
        for (const auto& f : files)
            sources.emplace_back(f.string(), read_file(f));
    }
    else if (fs::is_regular_file(path))
    {
        auto content = read_file(path);
        std::size_t line_no = 0;
        for (const auto& line : text::split_lines(content))
        {
            ++line_no;
            if (!text::trim(line).empty())
                sources.emplace_back(path.string() + ":" + std::to_string(line_no), line);
        }
    }
    else
        throw LoadError("problem path does not exist: " + path.string());

    if (sources.empty())
        throw LoadError("no problems found at " + path.string());

    std::vector<Problem> problems;
    std::map<std::string, std::string> seen;
    for (const auto& [where, content] : sources)
    {
        nlohmann::json j;
        try
        {
            j = nlohmann::json::parse(content);
        }
        catch (const nlohmann::json::parse_error& e)
        {
            throw LoadError(where + ": invalid JSON: " + e.what());
        }
        try
        {
            problems.push_back(parse_problem(j));
        }
        catch (const FieldError& e)
        {
            throw LoadError(where + ": field '" + e.field + "': " + e.message);
        }
        auto [it, fresh] = seen.emplace(problems.back().id, where);
        if (!fresh)
            throw LoadError(where + ": duplicate problem id '" + problems.back().id + "' (first defined in " +
                            it->second + ")");
    }
    return problems;
}

void check_repair_sources(const std::vector<Problem>& problems, const Sandbox& sandbox)
{
    for (const auto& p : problems)
        if (p.kind == TaskKind::Repair && !sandbox.compiles(*p.source_code))
            throw ConfigError("repair problem '" + p.id + "': the buggy source does not compile");
}

std::string build_query(const Problem& p)
{
    std::string q = p.prompt;
    if (!q.empty() && q.back() != '\n')
        q += '\n';
    if (p.signature)
        q += "\nRequired signature:\n" + *p.signature + "\n";
    if (p.source_code)
    {
        q += p.kind == TaskKind::Repair ? "\nProgram to repair:\n" : "\nProgram to translate:\n";
        q += "```\n" + *p.source_code + (p.source_code->ends_with('\n') ? "" : "\n") + "```\n";
    }
    if (p.symptom)
        q += "\nObserved failure:\n" + *p.symptom + "\n";
    return q;
}

Task make_task(const Problem& p)
{
    return Task{p.id, std::string(to_string(p.kind)), build_query(p), p.public_tests};
}

namespace
{

/// num / den rounded half-up to hundredths.
long long mean_hundredths(std::size_t num, std::size_t den)
{
    if (den == 0)
        return 0;
    return static_cast<long long>((200 * num + den) / (2 * den));
}

std::string pad(std::string s, std::size_t width, bool right = false)
{
    if (s.size() >= width)
        return s;
    return right ? std::string(width - s.size(), ' ') + s : s + std::string(width - s.size(), ' ');
}

} // namespace

CorpusStats corpus_stats(const std::vector<Problem>& problems)
{
    CorpusStats s;
    for (const auto& p : problems)
    {
        for (auto* row : {&s.by_kind[p.kind], &s.total})
        {
            row->problems += 1;
            row->public_tests += p.public_tests.size();
            row->private_tests += p.private_tests.size();
        }
    }
    return s;
}

nlohmann::json CorpusStats::to_json() const
{
    auto row = [](const Row& r) {
        return nlohmann::json{{"problems", r.problems},
                              {"public_tests", r.public_tests},
                              {"private_tests", r.private_tests},
                              {"mean_public_tests", text::format_hundredths(mean_hundredths(r.public_tests, r.problems))},
                              {"mean_private_tests",
                               text::format_hundredths(mean_hundredths(r.private_tests, r.problems))}};
    };
    nlohmann::json j = {{"total", row(total)}, {"by_task_kind", nlohmann::json::object()}};
    for (const auto& [k, r] : by_kind)
        j["by_task_kind"][std::string(to_string(k))] = row(r);
    return j;
}

std::string CorpusStats::to_table() const
{
    std::string out = pad("task", 11) + pad("problems", 10, true) + pad("avg public", 12, true) +
                      pad("avg private", 13, true) + "\n";
    auto line = [&](std::string name, const Row& r) {
        out += pad(std::move(name), 11) + pad(std::to_string(r.problems), 10, true) +
               pad(text::format_hundredths(mean_hundredths(r.public_tests, r.problems)), 12, true) +
               pad(text::format_hundredths(mean_hundredths(r.private_tests, r.problems)), 13, true) + "\n";
    };
    for (const auto& [k, r] : by_kind)
        line(std::string(to_string(k)), r);
    line("all", total);
    return out;
}

// ---------------------------------------------------------------- metrics

std::string Rate::acc() const
{
    return text::format_hundredths(acc_hundredths);
}

std::string Rate::cr() const
{
    return text::format_hundredths(cr_hundredths);
}

namespace
{

void add(Rate& r, const ProblemRecord& rec)
{
    r.total += 1;
    r.accepted += rec.accepted;
    r.compiled += rec.compiled;
}

void finish(Rate& r)
{
    r.acc_hundredths = text::percent_hundredths(static_cast<long long>(r.accepted), static_cast<long long>(r.total));
    r.cr_hundredths = text::percent_hundredths(static_cast<long long>(r.compiled), static_cast<long long>(r.total));
}

nlohmann::json rate_json(const Rate& r)
{
    return {{"total", r.total}, {"accepted", r.accepted}, {"compiled", r.compiled}, {"acc", r.acc()}, {"cr", r.cr()}};
}

} // namespace

MetricsReport compute_metrics(std::vector<ProblemRecord> records, std::string mode)
{
    if (records.empty())
        throw std::invalid_argument("compute_metrics: no records");
    MetricsReport m;
    m.mode = std::move(mode);
    for (const auto& r : records)
    {
        if (r.accepted && !r.compiled)
            throw std::invalid_argument("record '" + r.id + "' is accepted but not compiled");
        add(m.overall, r);
        add(m.by_kind[r.kind], r);
        m.provider_errors += r.provider_error;
        m.infrastructure_errors += r.provider_error || r.infrastructure_error;
    }
    finish(m.overall);
    for (auto& [k, rate] : m.by_kind)
        finish(rate);
    m.records = std::move(records);
    return m;
}

nlohmann::json MetricsReport::to_json() const
{
    nlohmann::json recs = nlohmann::json::array();
    for (const auto& r : records)
        recs.push_back({{"id", r.id},
                        {"task_kind", to_string(r.kind)},
                        {"accepted", r.accepted},
                        {"compiled", r.compiled},
                        {"terminal_reason", r.terminal_reason},
                        {"turns_used", r.turns_used},
                        {"provider_error", r.provider_error},
                        {"infrastructure_error", r.infrastructure_error}});
    nlohmann::json kinds = nlohmann::json::object();
    for (const auto& [k, rate] : by_kind)
        kinds[std::string(to_string(k))] = rate_json(rate);
    return {{"mode", mode},
            {"overall", rate_json(overall)},
            {"by_task_kind", std::move(kinds)},
            {"provider_errors", provider_errors},
            {"infrastructure_errors", infrastructure_errors},
            {"records", std::move(recs)}};
}

std::string MetricsReport::to_table() const
{
    std::string out = "mode: " + (mode.empty() ? std::string("-") : mode) + "\n\n";
    out += pad("task", 11) + pad("n", 5, true) + pad("ACC", 9, true) + pad("CR", 9, true) + "\n";
    auto line = [&](std::string name, const Rate& r) {
        out += pad(std::move(name), 11) + pad(std::to_string(r.total), 5, true) + pad(r.acc(), 9, true) +
               pad(r.cr(), 9, true) + "\n";
    };
    for (const auto& [k, rate] : by_kind)
        line(std::string(to_string(k)), rate);
    line("all", overall);
    out += "\nprovider errors: " + std::to_string(provider_errors) +
           "\ninfrastructure errors: " + std::to_string(infrastructure_errors) + "\n\n";
    out += pad("problem", 24) + pad("task", 11) + pad("accepted", 10) + pad("compiled", 10) + pad("turns", 7) +
           "terminal\n";
    for (const auto& r : records)
        out += pad(r.id, 24) + pad(std::string(to_string(r.kind)), 11) + pad(r.accepted ? "yes" : "no", 10) +
               pad(r.compiled ? "yes" : "no", 10) + pad(std::to_string(r.turns_used), 7) + r.terminal_reason + "\n";
    return out;
}

// ---------------------------------------------------------------- baselines

std::vector<std::string> parse_queries(std::string_view reply, std::size_t limit)
{
    std::vector<std::string> raw;
    auto open = reply.find('[');
    auto close = reply.rfind(']');
    bool parsed = false;
    if (open != std::string_view::npos && close != std::string_view::npos && close > open)
    {
        auto j = nlohmann::json::parse(reply.substr(open, close - open + 1), nullptr, false);
        if (j.is_array() && std::all_of(j.begin(), j.end(), [](const auto& v) { return v.is_string(); }))
        {
            for (const auto& v : j)
                raw.push_back(v.template get<std::string>());
            parsed = true;
        }
    }
    if (!parsed)
    {
        for (auto line : text::split_lines(reply))
        {
            line = text::trim(line);
            if (line.rfind("```", 0) == 0)
                continue;
            // Strip "-", "*", "1.", "2)" list markers.
            std::size_t i = 0;
            while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i])))
                ++i;
            if (i > 0 && i < line.size() && (line[i] == '.' || line[i] == ')'))
                line = text::trim(line.substr(i + 1));
            else if (!line.empty() && (line[0] == '-' || line[0] == '*'))
                line = text::trim(line.substr(1));
            raw.push_back(line);
        }
    }
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (auto& q : raw)
    {
        q = text::trim(q);
        if (q.empty() || !seen.insert(q).second)
            continue;
        if (out.size() == limit)
            break;
        out.push_back(q);
    }
    return out;
}

ControllerDecision parse_controller_decision(std::string_view reply, std::size_t max_queries)
{
    ControllerDecision d;
    auto open = reply.find('{');
    auto close = reply.rfind('}');
    if (open == std::string_view::npos || close == std::string_view::npos || close < open)
    {
        d.malformed = true;
        return d;
    }
    auto j = nlohmann::json::parse(reply.substr(open, close - open + 1), nullptr, false);
    if (!j.is_object() || !j.contains("sufficient") || !j["sufficient"].is_boolean())
    {
        d.malformed = true;
        return d;
    }
    d.sufficient = j["sufficient"].get<bool>();
    if (j.contains("queries") && j["queries"].is_array())
    {
        std::set<std::string> seen;
        for (const auto& q : j["queries"])
        {
            if (!q.is_string())
                continue;
            auto t = text::trim(q.get<std::string>());
            if (!t.empty() && seen.insert(t).second && d.queries.size() < max_queries)
                d.queries.push_back(t);
        }
    }
    return d;
}

namespace
{

const char* kBaselineSystem =
    "You are an expert programmer solving a task in a programming language that may be unfamiliar to you.";
const char* kAnswerFormat = "\nReply with the complete solution program in a single fenced code block.\n";

ChatResponse ask(ChatProvider& chat, const std::string& user, double temperature)
{
    ChatRequest req;
    req.messages = {{"system", kBaselineSystem, {}, {}}, {"user", user, {}, {}}};
    req.temperature = temperature;
    return chat.complete(req);
}

/// Chunks gathered across retrieval calls, deduplicated, first-retrieved order.
struct Context
{
    std::vector<std::string> chunk_ids;
    std::set<std::string> seen;

    std::vector<std::string> retrieve(const Resources& res, const std::vector<std::string>& queries, std::size_t k)
    {
        std::vector<std::string> got;
        for (const auto& q : queries)
        {
            std::vector<std::string> one{q};
            auto r = sem_search(*res.index, *res.embedder, one, k);
            for (const auto& hit : r.merged)
            {
                got.push_back(hit.chunk_id);
                if (seen.insert(hit.chunk_id).second)
                    chunk_ids.push_back(hit.chunk_id);
            }
        }
        return got;
    }

    std::string render(const DocStore& docs) const
    {
        std::string out;
        for (const auto& id : chunk_ids)
        {
            const DocChunk* c = docs.chunk(id);
            if (!c)
                continue;
            out += "[" + c->section_id + "]\n" + c->text;
            if (!out.empty() && out.back() != '\n')
                out += '\n';
            out += '\n';
        }
        return out;
    }
};

struct BaselineOutcome
{
    nlohmann::json log;
    std::string solution;
    int calls = 0;
    bool provider_error = false;
};

BaselineOutcome run_baseline(const Problem& p, Mode mode, const Resources& res, ChatProvider& chat,
                             const RunConfig& config)
{
    BaselineOutcome out;
    const auto query = build_query(p);
    nlohmann::json rounds = nlohmann::json::array();
    std::string error;
    try
    {
        Context ctx;
        if (mode == Mode::SingleRag)
        {
            auto reply = ask(chat,
                             query + "\nBefore solving, write up to " + std::to_string(config.rag.max_queries) +
                                 " distinct search queries for the language documentation that would help. "
                                 "Reply with a JSON array of strings.\n",
                             config.temperature);
            ++out.calls;
            auto queries = parse_queries(reply.content, config.rag.max_queries);
            auto got = ctx.retrieve(res, queries, config.rag.top_k);
            rounds.push_back({{"round", 1}, {"queries", queries}, {"retrieved", got}});
        }
        else if (mode == Mode::IterativeRag)
        {
            for (std::size_t round = 1; round <= config.rag.max_rounds; ++round)
            {
                auto collected = ctx.render(*res.docs);
                auto reply = ask(chat,
                                 query + "\nDocumentation collected so far:\n" +
                                     (collected.empty() ? std::string("(none yet)\n") : collected) +
                                     "\nIs this documentation sufficient to write the solution? Reply with a JSON "
                                     "object {\"sufficient\": true or false, \"queries\": [up to " +
                                     std::to_string(config.rag.queries_per_round) +
                                     " new search queries]}.\n",
                                 config.temperature);
                ++out.calls;
                auto d = parse_controller_decision(reply.content, config.rag.queries_per_round);
                nlohmann::json entry = {{"round", round}, {"sufficient", d.sufficient}, {"queries", d.queries}};
                if (d.malformed)
                    entry["malformed"] = true;
                if (d.sufficient)
                {
                    entry["retrieved"] = nlohmann::json::array();
                    rounds.push_back(std::move(entry));
                    break;
                }
                entry["retrieved"] = ctx.retrieve(res, d.queries, config.rag.top_k);
                rounds.push_back(std::move(entry));
            }
        }

        std::string prompt = query;
        if (mode != Mode::ZeroShot)
        {
            auto collected = ctx.render(*res.docs);
            prompt += "\nRelevant documentation:\n" + (collected.empty() ? std::string("(nothing found)\n") : collected);
        }
        auto reply = ask(chat, prompt + kAnswerFormat, config.temperature);
        ++out.calls;
        out.solution = text::last_fenced_block(reply.content).value_or("");
    }
    catch (const TransportError& e)
    {
        out.provider_error = true;
        out.solution.clear();
        error = e.what();
    }

    out.log = {{"schema_version", kTrajectorySchemaVersion},
               {"mode", to_string(mode)},
               {"problem_id", p.id},
               {"task_kind", to_string(p.kind)},
               {"model_calls", out.calls},
               {"terminal_reason", out.provider_error ? "provider-error" : "completed"},
               {"final_solution", out.solution}};
    if (mode != Mode::ZeroShot)
        out.log["retrieval_rounds"] = std::move(rounds);
    if (!error.empty())
        out.log["error"] = error;
    return out;
}

struct Slot
{
    ProblemRecord record;
    nlohmann::json log;
    nlohmann::json timing;
};

Slot run_one(const Problem& p, const Resources& res, const Factories& f, const RunConfig& config)
{
    auto started = std::chrono::system_clock::now();
    auto t0 = std::chrono::steady_clock::now();
    Slot s;
    s.record.id = p.id;
    s.record.kind = p.kind;

    std::string solution;
    if (config.mode == Mode::IlaAgent)
    {
        auto policy = f.policy(p);
        auto traj = run_trajectory(make_task(p), res, *policy, config.agent);
        s.record.terminal_reason = std::string(to_string(traj.terminal_reason));
        s.record.turns_used = static_cast<int>(traj.steps.size());
        s.record.provider_error = traj.terminal_reason == TerminalReason::ProviderError;
        solution = traj.final_solution;
        auto g = res.sandbox->grade(solution, p.private_tests);
        traj.accepted = g.accepted;
        traj.compiled = g.compiled;
        s.record.accepted = g.accepted;
        s.record.compiled = g.compiled;
        s.record.infrastructure_error = g.infrastructure_error;
        s.log = traj.to_json();
    }
    else
    {
        auto chat = f.chat(p);
        auto b = run_baseline(p, config.mode, res, *chat, config);
        s.record.terminal_reason = b.log["terminal_reason"].get<std::string>();
        s.record.turns_used = b.calls;
        s.record.provider_error = b.provider_error;
        auto g = res.sandbox->grade(b.solution, p.private_tests);
        s.record.accepted = g.accepted;
        s.record.compiled = g.compiled;
        s.record.infrastructure_error = g.infrastructure_error;
        b.log["accepted"] = g.accepted;
        b.log["compiled"] = g.compiled;
        s.log = std::move(b.log);
    }

    auto wall = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0).count();
    s.timing = {{"problem_id", p.id},
                {"started_at_unix_ms",
                 std::chrono::duration_cast<std::chrono::milliseconds>(started.time_since_epoch()).count()},
                {"wall_time_ms", wall}};
    return s;
}

} // namespace

void check_resources(Mode mode, const Resources& r)
{
    if (!r.sandbox)
        throw ConfigError("missing resource: sandbox (toolchain config)");
    if (mode == Mode::ZeroShot)
        return;
    if (!r.docs)
        throw ConfigError("missing resource: document store (required by " + std::string(to_string(mode)) + ")");
    if (!r.index || !r.embedder)
        throw ConfigError("missing resource: vector index (required by " + std::string(to_string(mode)) + ")");
}

RunOutput run_mode(const std::vector<Problem>& problems,
                   const Resources& resources,
                   const Factories& factories,
                   const RunConfig& config)
{
    if (problems.empty())
        throw ConfigError("no problems to run");
    check_resources(config.mode, resources);
    config.agent.validate();
    if (config.mode == Mode::IlaAgent ? !factories.policy : !factories.chat)
        throw ConfigError("no decision maker configured for mode " + std::string(to_string(config.mode)));

    std::vector<Slot> slots(problems.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < problems.size();)
        {
            try
            {
                slots[i] = run_one(problems[i], resources, factories, config);
            }
            catch (...)
            {
                std::lock_guard lock(failure_mutex);
                if (!failure)
                    failure = std::current_exception();
                next = problems.size();
            }
        }
    };
    auto n = std::clamp<std::size_t>(config.parallelism, 1, problems.size());
    std::vector<std::thread> threads;
    for (std::size_t t = 1; t < n; ++t)
        threads.emplace_back(worker);
    worker();
    for (auto& t : threads)
        t.join();
    if (failure)
        std::rethrow_exception(failure);

    RunOutput out;
    std::vector<ProblemRecord> records;
    for (auto& s : slots)
    {
        records.push_back(std::move(s.record));
        out.log.push_back(std::move(s.log));
        out.timings.push_back(std::move(s.timing));
    }
    out.report = compute_metrics(std::move(records), std::string(to_string(config.mode)));
    return out;
}

} // namespace ila
