// SPDX-License-Identifier: Apache-2.0
// ila: ingest documentation, run benchmarks, replay and analyze trajectories.
#include <ila/agent.hpp>
#include <ila/analysis.hpp>
#include <ila/bench.hpp>
#include <ila/docstore.hpp>
#include <ila/error.hpp>
#include <ila/policy.hpp>
#include <ila/retrieval.hpp>
#include <ila/sandbox.hpp>
#include <ila/text.hpp>
#include <ila/typeindex.hpp>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace
{

constexpr int kExitOk = 0;
constexpr int kExitInfra = 1;
constexpr int kExitConfig = 2;

constexpr const char* kStoreFile = "docstore.json";
constexpr const char* kIndexFile = "index.json";
constexpr const char* kTypesFile = "types.json";

// ---------------------------------------------------------------- configuration

/// Keys holding paths; relative values in a config file are resolved
/// against the file's directory.
const std::vector<std::string> kPathKeys = {"/docs",        "/artifacts",     "/problems",
                                            "/toolchain",   "/out",           "/type_manifest",
                                            "/policy/script", "/provider/log_requests"};
const std::vector<std::string> kIntKeys = {"/max_turns", "/k", "/parallelism", "/max_observation_chars",
                                           "/seed",      "/context_budget_tokens", "/embedder/dim",
                                           "/provider/max_retries", "/provider/timeout_s"};
const std::vector<std::string> kFloatKeys = {"/temperature"};

json defaults()
{
    return {{"mode", "ila-agent"},
            {"max_turns", 15},
            {"k", 5},
            {"max_observation_chars", 8000},
            {"parallelism", 1},
            {"seed", 0},
            {"temperature", 1.0},
            {"context_budget_tokens", 128000},
            {"types", true},
            {"type_heuristic", true},
            {"policy", {{"kind", "llm"}}},
            {"provider", {{"api_key_env", "ILA_API_KEY"}, {"max_retries", 3}, {"timeout_s", 120}}},
            {"embedder", {{"kind", "hashing"}, {"dim", static_cast<int>(ila::HashingEmbedder::kDefaultDim)}}}};
}

void merge(json& into, const json& from)
{
    for (auto it = from.begin(); it != from.end(); ++it)
    {
        if (it->is_object() && into.contains(it.key()) && into[it.key()].is_object())
            merge(into[it.key()], *it);
        else
            into[it.key()] = *it;
    }
}

/// Flag values collected as text and applied over the config file.
class Overrides
{
public:
    CLI::Option* add(CLI::App* app, const std::string& flag, const std::string& pointer, const std::string& help)
    {
        auto& slot = values_[pointer];
        auto* opt = app->add_option(flag, slot, help);
        options_.emplace_back(pointer, opt);
        return opt;
    }

    CLI::Option* add_flag(CLI::App* app, const std::string& flag, const std::string& pointer, bool value,
                          const std::string& help)
    {
        auto* opt = app->add_flag(flag, help);
        flags_.push_back({pointer, opt, value});
        return opt;
    }

    void apply(json& cfg) const
    {
        for (const auto& [pointer, opt] : options_)
        {
            if (opt->count() == 0)
                continue;
            const auto& v = values_.at(pointer);
            json::json_pointer ptr(pointer);
            try
            {
                if (contains(kIntKeys, pointer))
                    cfg[ptr] = std::stoll(v);
                else if (contains(kFloatKeys, pointer))
                    cfg[ptr] = std::stod(v);
                else
                    cfg[ptr] = v;
            }
            catch (const std::logic_error&)
            {
                throw ila::ConfigError("invalid value for " + opt->get_name() + ": " + v);
            }
        }
        for (const auto& f : flags_)
            if (f.option->count() > 0)
                cfg[json::json_pointer(f.pointer)] = f.value;
    }

private:
    struct Flag
    {
        std::string pointer;
        CLI::Option* option;
        bool value;
    };

    static bool contains(const std::vector<std::string>& keys, const std::string& k)
    {
        return std::find(keys.begin(), keys.end(), k) != keys.end();
    }

    std::map<std::string, std::string> values_;
    std::vector<std::pair<std::string, CLI::Option*>> options_;
    std::vector<Flag> flags_;
};

json load_config(const std::string& path)
{
    json cfg = defaults();
    if (path.empty())
        return cfg;
    std::ifstream in(path);
    if (!in)
        throw ila::ConfigError("cannot read config file: " + path);
    json file;
    try
    {
        file = json::parse(in);
    }
    catch (const json::parse_error& e)
    {
        throw ila::ConfigError("malformed config file " + path + ": " + e.what());
    }
    if (!file.is_object())
        throw ila::ConfigError("config file must contain a JSON object: " + path);
    auto base = fs::absolute(path).parent_path();
    for (const auto& key : kPathKeys)
    {
        json::json_pointer ptr(key);
        if (file.contains(ptr) && file[ptr].is_string() && fs::path(file[ptr].get<std::string>()).is_relative())
            file[ptr] = (base / file[ptr].get<std::string>()).lexically_normal().string();
    }
    merge(cfg, file);
    return cfg;
}

template <typename T>
T get(const json& cfg, const std::string& pointer)
{
    json::json_pointer ptr(pointer);
    if (!cfg.contains(ptr) || cfg[ptr].is_null())
        throw ila::ConfigError("missing configuration value: " + pointer.substr(1));
    try
    {
        return cfg[ptr].get<T>();
    }
    catch (const json::exception&)
    {
        throw ila::ConfigError("invalid configuration value: " + pointer.substr(1));
    }
}

std::string get_or(const json& cfg, const std::string& pointer, const std::string& fallback)
{
    json::json_pointer ptr(pointer);
    return cfg.contains(ptr) && cfg[ptr].is_string() ? cfg[ptr].get<std::string>() : fallback;
}

fs::path existing(const json& cfg, const std::string& pointer, const std::string& what)
{
    fs::path p = get<std::string>(cfg, pointer);
    if (!fs::exists(p))
        throw ila::ConfigError(what + " not found: " + p.string());
    return p;
}

ila::http::Settings http_settings(const json& section, const std::string& what)
{
    ila::http::Settings s;
    s.url = section.value("url", "");
    if (s.url.empty())
        throw ila::ConfigError(what + ": url is required");
    auto env = section.value("api_key_env", "ILA_API_KEY");
    if (const char* key = std::getenv(env.c_str()))
        s.api_key = key;
    s.max_retries = section.value("max_retries", 3);
    s.timeout = std::chrono::seconds(section.value("timeout_s", 120));
    return s;
}

std::unique_ptr<ila::EmbeddingProvider> make_embedder(const json& cfg)
{
    const auto& e = cfg.at("embedder");
    auto kind = e.value("kind", "hashing");
    if (kind == "hashing")
        return std::make_unique<ila::HashingEmbedder>(e.value("dim", ila::HashingEmbedder::kDefaultDim));
    if (kind == "remote")
        return std::make_unique<ila::HttpEmbeddingProvider>(http_settings(e, "embedder"), e.value("model", ""));
    throw ila::ConfigError("unknown embedder kind '" + kind + "' (expected hashing or remote)");
}

void write_text(const fs::path& path, const std::string& content)
{
    ila::analysis::write_file(path, content);
}

std::string jsonl(const std::vector<json>& lines)
{
    std::string out;
    for (const auto& l : lines)
        out += l.dump(-1, ' ', false, json::error_handler_t::replace) + "\n";
    return out;
}

// ---------------------------------------------------------------- resources

struct Loaded
{
    std::vector<ila::Problem> problems;
    std::unique_ptr<ila::Sandbox> sandbox;
    std::unique_ptr<ila::DocStore> docs;
    std::unique_ptr<ila::VectorIndex> index;
    std::unique_ptr<ila::TypeIndex> types;
    std::unique_ptr<ila::EmbeddingProvider> embedder;

    ila::Resources resources() const
    {
        return {docs.get(), index.get(), embedder.get(), types.get(), sandbox.get()};
    }
};

Loaded load_resources(const json& cfg, ila::Mode mode)
{
    Loaded l;
    auto toolchain = ila::ToolchainConfig::load(existing(cfg, "/toolchain", "toolchain config"));
    l.sandbox = std::make_unique<ila::Sandbox>(toolchain);
    l.problems = ila::load_problems(existing(cfg, "/problems", "problem set"));

    auto artifacts = get_or(cfg, "/artifacts", "");
    if (mode != ila::Mode::ZeroShot)
    {
        if (artifacts.empty())
            throw ila::ConfigError("missing resource: artifacts directory (run `ila ingest` first)");
        auto store_path = fs::path(artifacts) / kStoreFile;
        auto index_path = fs::path(artifacts) / kIndexFile;
        if (!fs::exists(store_path))
            throw ila::ConfigError("missing resource: document store " + store_path.string());
        if (!fs::exists(index_path))
            throw ila::ConfigError("missing resource: vector index " + index_path.string());
        l.embedder = make_embedder(cfg);
        l.docs = std::make_unique<ila::DocStore>(ila::DocStore::load(store_path));
        l.index = std::make_unique<ila::VectorIndex>(ila::VectorIndex::load(index_path, l.embedder->tag()));
        l.index->check_against(*l.docs);
        auto types_path = fs::path(artifacts) / kTypesFile;
        if (mode == ila::Mode::IlaAgent && cfg.value("types", true) && fs::exists(types_path))
            l.types = std::make_unique<ila::TypeIndex>(ila::TypeIndex::load(types_path, *l.docs));
    }
    ila::check_repair_sources(l.problems, *l.sandbox);
    return l;
}

// ---------------------------------------------------------------- policies

/// Expands {{reference}} and {{source}} in every string of `j`.
json substitute(json j, const ila::Problem& p)
{
    if (j.is_string())
    {
        auto s = j.get<std::string>();
        auto replace = [&](const std::string& key, const std::optional<std::string>& value) {
            for (std::size_t pos; (pos = s.find(key)) != std::string::npos;)
                s.replace(pos, key.size(), value.value_or(""));
        };
        replace("{{reference}}", p.reference_solution);
        replace("{{source}}", p.source_code);
        return s;
    }
    if (j.is_array() || j.is_object())
        for (auto& v : j)
            v = substitute(v, p);
    return j;
}

class Script
{
public:
    explicit Script(const fs::path& path)
    {
        std::ifstream in(path);
        if (!in)
            throw ila::ConfigError("cannot read policy script " + path.string());
        try
        {
            doc_ = json::parse(in);
        }
        catch (const json::parse_error& e)
        {
            throw ila::ConfigError("malformed policy script " + path.string() + ": " + e.what());
        }
        if (!doc_.is_object())
            throw ila::ConfigError("policy script must be a JSON object keyed by problem id or \"default\"");
    }

    json entry(const ila::Problem& p) const
    {
        if (doc_.contains(p.id))
            return substitute(doc_[p.id], p);
        if (doc_.contains("default"))
            return substitute(doc_["default"], p);
        throw ila::ConfigError("policy script has no entry for problem '" + p.id + "' and no default");
    }

private:
    json doc_;
};

std::vector<ila::ChatResponse> scripted_responses(const json& list)
{
    std::vector<ila::ChatResponse> out;
    for (const auto& r : list)
    {
        ila::ChatResponse resp;
        if (r.is_string())
            resp.content = r.get<std::string>();
        else
        {
            resp.content = r.value("content", "");
            for (const auto& c : r.value("tool_calls", json::array()))
            {
                const auto& args = c.contains("arguments") ? c["arguments"] : json::object();
                resp.tool_calls.push_back({c.value("id", ""), c.at("name").get<std::string>(),
                                           args.is_string() ? args.get<std::string>() : args.dump()});
            }
        }
        out.push_back(std::move(resp));
    }
    if (out.empty())
        throw ila::ConfigError("policy script entry has an empty responses list");
    return out;
}

/// A chat provider that answers every baseline prompt with the problem's
/// reference solution; used to exercise the baseline plumbing offline.
std::shared_ptr<ila::ChatProvider> reference_chat(const ila::Problem& p)
{
    auto solution = p.reference_solution.value_or("");
    auto words = ila::text::split_lines(p.prompt).empty() ? std::string() : ila::text::split_lines(p.prompt).front();
    return std::make_shared<ila::ScriptedChatProvider>(
        [solution, words](const ila::ChatRequest& req, std::size_t) {
            const auto& last = req.messages.back().content;
            ila::ChatResponse r;
            if (last.find("JSON array of strings") != std::string::npos)
                r.content = json::array({words}).dump();
            else if (last.find("\"sufficient\"") != std::string::npos)
                r.content = R"({"sufficient": true, "queries": []})";
            else
                r.content = "```\n" + solution + "\n```\n";
            return r;
        });
}

std::vector<ila::Action> random_pool(const ila::Problem& p, const ila::Resources& res)
{
    std::vector<ila::ToolName> all(std::begin(ila::kAllTools), std::end(ila::kAllTools));
    std::vector<ila::Action> pool;
    pool.push_back(ila::make_action("ViewStruct", json::object(), all));
    if (res.docs)
    {
        std::size_t added = 0;
        for (const auto& c : res.docs->chunks())
        {
            if (added++ % 7 != 0)
                continue;
            pool.push_back(ila::make_action("ViewDetail", {{"section_id", c.section_id}}, all));
        }
    }
    auto first_line = ila::text::split_lines(p.prompt);
    pool.push_back(ila::make_action("SemSearch", {{"queries", json::array({first_line.empty() ? p.id : first_line.front()})}}, all));
    pool.push_back(ila::make_action("TypeLookup", {{"name", "Array"}}, all));
    pool.push_back(ila::make_action("Execute", {{"code", "print(\"probe\")\n"}}, all));
    if (p.reference_solution)
        pool.push_back(ila::make_action("Submit", {{"solution", *p.reference_solution}}, all));
    pool.push_back(ila::make_action("Submit", {{"solution", p.source_code.value_or("print(0)\n")}}, all));
    pool.push_back(ila::Action::invalid("no tool call in reply", "I am not sure."));
    return pool;
}

ila::Factories make_factories(const json& cfg, const ila::Resources& res)
{
    ila::Factories f;
    auto kind = get<std::string>(cfg, "/policy/kind");
    ila::PolicyConfig pc;
    pc.temperature = get<double>(cfg, "/temperature");
    pc.context_budget_tokens = get<std::size_t>(cfg, "/context_budget_tokens");
    pc.max_retries = cfg["provider"].value("max_retries", 3);
    pc.validate();

    if (kind == "llm")
    {
        auto settings = http_settings(cfg.at("provider"), "provider");
        auto model = cfg["provider"].value("model", "");
        if (model.empty())
            throw ila::ConfigError("provider: model is required");
        auto chat = std::make_shared<ila::HttpChatProvider>(settings, model);
        if (auto log = get_or(cfg, "/provider/log_requests", ""); !log.empty())
            chat->log_requests_to(log);
        f.chat = [chat](const ila::Problem&) { return chat; };
        f.policy = [chat, pc](const ila::Problem&) { return std::make_unique<ila::LlmPolicy>(chat, pc); };
    }
    else if (kind == "scripted")
    {
        auto script = std::make_shared<Script>(existing(cfg, "/policy/script", "policy script"));
        f.chat = [script](const ila::Problem& p) -> std::shared_ptr<ila::ChatProvider> {
            auto e = script->entry(p);
            if (!e.contains("responses"))
                throw ila::ConfigError("policy script entry for '" + p.id + "' has no responses");
            return std::make_shared<ila::ScriptedChatProvider>(scripted_responses(e["responses"]));
        };
        f.policy = [script, pc](const ila::Problem& p) -> std::unique_ptr<ila::Policy> {
            auto e = script->entry(p);
            if (e.contains("actions"))
            {
                std::vector<ila::Action> actions;
                for (const auto& a : e["actions"])
                    actions.push_back(ila::action_from_log(a.at("tool").get<std::string>(),
                                                           a.value("arguments", json::object())));
                return std::make_unique<ila::ScriptedPolicy>(std::move(actions));
            }
            if (e.contains("responses"))
                return std::make_unique<ila::LlmPolicy>(
                    std::make_shared<ila::ScriptedChatProvider>(scripted_responses(e["responses"])), pc);
            throw ila::ConfigError("policy script entry for '" + p.id + "' has neither actions nor responses");
        };
    }
    else if (kind == "reference")
    {
        f.chat = reference_chat;
        f.policy = [](const ila::Problem& p) -> std::unique_ptr<ila::Policy> {
            std::vector<ila::ToolName> all(std::begin(ila::kAllTools), std::end(ila::kAllTools));
            return std::make_unique<ila::ScriptedPolicy>(std::vector<ila::Action>{
                ila::make_action("ViewStruct", json::object(), all),
                ila::make_action("Submit", {{"solution", p.reference_solution.value_or("")}}, all)});
        };
    }
    else if (kind == "random")
    {
        auto seed = get<std::uint64_t>(cfg, "/seed");
        f.chat = reference_chat;
        f.policy = [seed, res](const ila::Problem& p) -> std::unique_ptr<ila::Policy> {
            return std::make_unique<ila::RandomPolicy>(random_pool(p, res),
                                                       seed ^ ila::HashingEmbedder::fnv1a(p.id));
        };
    }
    else
        throw ila::ConfigError("unknown policy kind '" + kind + "' (expected llm, scripted, reference or random)");
    return f;
}

ila::AgentConfig agent_config(const json& cfg)
{
    ila::AgentConfig a;
    a.max_turns = get<int>(cfg, "/max_turns");
    a.k = get<std::size_t>(cfg, "/k");
    a.max_observation_chars = get<std::size_t>(cfg, "/max_observation_chars");
    a.validate();
    return a;
}

// ---------------------------------------------------------------- commands

int cmd_ingest(const json& cfg)
{
    auto docs_root = existing(cfg, "/docs", "documentation directory");
    fs::path out = get<std::string>(cfg, "/artifacts");
    fs::create_directories(out);

    auto store = ila::DocStore::ingest(docs_root);
    store.save(out / kStoreFile);
    auto embedder = make_embedder(cfg);
    auto index = ila::VectorIndex::build(store, *embedder);
    index.save(out / kIndexFile);
    std::cout << "sections: " << store.nodes().size() - 1 << "\n"
              << "chunks: " << store.chunks().size() << "\n"
              << "index: " << index.entries().size() << " vectors, " << index.dim() << " dims ("
              << index.provider_tag() << ")\n";

    if (cfg.value("types", true))
    {
        std::optional<json> manifest;
        if (auto m = get_or(cfg, "/type_manifest", ""); !m.empty())
            manifest = ila::TypeIndex::read_manifest(m);
        ila::TypeIndexOptions opts;
        opts.use_heuristic = cfg.value("type_heuristic", true);
        auto types = ila::TypeIndex::build(store, manifest, opts);
        types.save(out / kTypesFile);
        std::cout << "types: " << types.entries().size() << "\n";
    }
    else
    {
        std::error_code ec;
        fs::remove(out / kTypesFile, ec);
    }
    std::cout << "wrote " << out.string() << "\n";
    return kExitOk;
}

int cmd_run(const json& cfg)
{
    auto mode_name = get<std::string>(cfg, "/mode");
    auto mode = ila::mode_from_string(mode_name);
    if (!mode)
        throw ila::ConfigError("unknown mode '" + mode_name + "'");
    fs::path out = get<std::string>(cfg, "/out");

    ila::RunConfig rc;
    rc.mode = *mode;
    rc.agent = agent_config(cfg);
    rc.rag.top_k = rc.agent.k;
    rc.temperature = get<double>(cfg, "/temperature");
    rc.parallelism = static_cast<unsigned>(std::max<long long>(1, get<long long>(cfg, "/parallelism")));

    auto loaded = load_resources(cfg, *mode);
    auto res = loaded.resources();
    auto factories = make_factories(cfg, res);
    fs::create_directories(out);

    auto started = std::chrono::system_clock::now();
    auto result = ila::run_mode(loaded.problems, res, factories, rc);

    write_text(out / "trajectories.jsonl", jsonl(result.log));
    write_text(out / "report.json", result.report.to_json().dump(2) + "\n");
    write_text(out / "report.txt", result.report.to_table());
    write_text(out / "timings.jsonl", jsonl(result.timings));
    json meta = {{"started_at_unix_ms",
                  std::chrono::duration_cast<std::chrono::milliseconds>(started.time_since_epoch()).count()},
                 {"finished_at_unix_ms",
                  std::chrono::duration_cast<std::chrono::milliseconds>(
                      std::chrono::system_clock::now().time_since_epoch())
                      .count()},
                 {"mode", mode_name},
                 {"system_prompt_version", ila::kSystemPromptVersion},
                 {"policy", cfg["policy"]},
                 {"seed", cfg["seed"]}};
    write_text(out / "meta.json", meta.dump(2) + "\n");

    std::cout << result.report.to_table();
    if (result.report.infrastructure_errors > 0)
    {
        std::cerr << "error: " << result.report.infrastructure_errors
                  << " problem(s) hit infrastructure errors (provider or sandbox)\n";
        return kExitInfra;
    }
    return kExitOk;
}

int cmd_replay(const json& cfg, const std::string& log_path, const std::string& replay_out)
{
    auto loaded = load_resources(cfg, ila::Mode::IlaAgent);
    auto res = loaded.resources();
    auto agent = agent_config(cfg);
    std::map<std::string, const ila::Problem*> by_id;
    for (const auto& p : loaded.problems)
        by_id[p.id] = &p;

    std::ifstream in(log_path, std::ios::binary);
    if (!in)
        throw ila::ConfigError("cannot read trajectory log " + log_path);
    std::vector<json> replayed;
    std::size_t trajectories = 0, mismatched = 0;
    std::string line;
    while (std::getline(in, line))
    {
        if (ila::text::trim(line).empty())
            continue;
        auto j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.contains("steps"))
            continue;
        auto logged = ila::Trajectory::from_json(j);
        auto it = by_id.find(logged.problem_id);
        if (it == by_id.end())
            throw ila::ConfigError("trajectory for unknown problem '" + logged.problem_id + "'");
        auto r = ila::replay(logged, ila::make_task(*it->second), res, agent);
        if (logged.accepted || logged.compiled)
        {
            auto g = loaded.sandbox->grade(r.replayed.final_solution, it->second->private_tests);
            r.replayed.accepted = g.accepted;
            r.replayed.compiled = g.compiled;
        }
        ++trajectories;
        if (!r.mismatched_turns.empty())
        {
            ++mismatched;
            std::cerr << "mismatch: " << logged.problem_id << " turns";
            for (int t : r.mismatched_turns)
                std::cerr << " " << t;
            std::cerr << "\n";
        }
        replayed.push_back(r.replayed.to_json());
    }
    if (!replay_out.empty())
        write_text(replay_out, jsonl(replayed));
    std::cout << "replayed " << trajectories << " trajectories, " << mismatched << " with differing observations\n";
    return mismatched == 0 ? kExitOk : kExitInfra;
}

int cmd_analyze(const std::string& log_path,
                const std::string& out_dir,
                std::size_t stages,
                bool all_for_profile,
                bool success_for_matrix,
                const std::string& labels_csv)
{
    if (!fs::exists(log_path))
        throw ila::ConfigError("trajectory log not found: " + log_path);
    auto log = ila::analysis::load_log(log_path);
    if (log.corrupt_lines > 0)
        std::cerr << "warning: skipped " << log.corrupt_lines << " corrupt line(s)\n";

    std::vector<std::string> labels = ila::analysis::default_labels();
    if (!labels_csv.empty())
    {
        labels.clear();
        std::stringstream ss(labels_csv);
        for (std::string l; std::getline(ss, l, ',');)
            if (!ila::text::trim(l).empty())
                labels.push_back(ila::text::trim(l));
    }

    const auto& all = log.trajectories;
    auto success = ila::analysis::successful(all);
    auto profile = ila::analysis::stage_profile(all_for_profile ? all : success, labels, stages);
    auto matrix = ila::analysis::transition_matrix(success_for_matrix ? success : all, labels);
    if (profile.skipped_empty > 0)
        std::cerr << "warning: skipped " << profile.skipped_empty << " trajectory(ies) with no actions\n";
    if (profile.trajectories == 0)
        std::cerr << "warning: no trajectories selected for the stage profile\n";

    fs::create_directories(out_dir);
    ila::analysis::write_file(fs::path(out_dir) / "stage_profile.csv", ila::analysis::profile_csv(profile));
    ila::analysis::write_file(fs::path(out_dir) / "transitions.csv", ila::analysis::matrix_csv(matrix));
    ila::analysis::write_file(fs::path(out_dir) / "stage_profile.svg", ila::analysis::profile_svg(profile));
    ila::analysis::write_file(fs::path(out_dir) / "transitions.svg", ila::analysis::matrix_svg(matrix));
    std::cout << "trajectories: " << all.size() << " (" << success.size() << " successful)\n"
              << "profile: " << profile.trajectories << " trajectories, " << profile.total() << " actions, "
              << stages << " stages\n"
              << "transitions: " << matrix.total() << " pairs\n"
              << "wrote " << out_dir << "\n";
    return kExitOk;
}

int cmd_stats(const json& cfg, bool as_json)
{
    auto problems = ila::load_problems(existing(cfg, "/problems", "problem set"));
    auto stats = ila::corpus_stats(problems);
    std::cout << (as_json ? stats.to_json().dump(2) + "\n" : stats.to_table());
    return kExitOk;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Inference-time language acquisition: documentation tools, agent runs and analytics."};
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("-c,--config", config_path, "JSON configuration file; flags override its values");

    Overrides ov;

    auto* ingest = app.add_subcommand("ingest", "Build the document store, vector index and type index");
    ov.add(ingest, "--docs", "/docs", "Documentation directory containing manifest.txt");
    ov.add(ingest, "--out,--artifacts", "/artifacts", "Output directory for the built artifacts");
    ov.add(ingest, "--type-manifest", "/type_manifest", "JSON type manifest");
    ov.add_flag(ingest, "--no-type-heuristic", "/type_heuristic", false, "Only use the type manifest");
    ov.add_flag(ingest, "--no-types", "/types", false, "Skip the type index");
    ov.add(ingest, "--embedder", "/embedder/kind", "hashing or remote");
    ov.add(ingest, "--embed-url", "/embedder/url", "Embedding endpoint URL");
    ov.add(ingest, "--embed-model", "/embedder/model", "Embedding model name");

    auto* run = app.add_subcommand("run", "Run a benchmark mode over a problem set");
    auto* replay_cmd = app.add_subcommand("replay", "Re-execute the actions of a trajectory log");
    for (auto* cmd : {run, replay_cmd})
    {
        ov.add(cmd, "--problems", "/problems", "Problem directory or JSONL file");
        ov.add(cmd, "--toolchain", "/toolchain", "Toolchain config JSON");
        ov.add(cmd, "--artifacts", "/artifacts", "Directory written by `ila ingest`");
        ov.add(cmd, "--max-turns", "/max_turns", "Agent turn budget");
        ov.add(cmd, "--k", "/k", "Chunks per retrieval query");
        ov.add(cmd, "--max-observation-chars", "/max_observation_chars", "Observation length cap");
        ov.add_flag(cmd, "--no-types", "/types", false, "Do not offer TypeLookup");
        ov.add(cmd, "--embedder", "/embedder/kind", "hashing or remote");
    }
    ov.add(run, "--mode", "/mode", "zero-shot, single-rag, iterative-rag or ila-agent");
    ov.add(run, "--out", "/out", "Output directory");
    ov.add(run, "--policy", "/policy/kind", "llm, scripted, reference or random");
    ov.add(run, "--script", "/policy/script", "Script file for the scripted policy");
    ov.add(run, "--seed", "/seed", "Seed for the random policy");
    ov.add(run, "--parallelism", "/parallelism", "Problems run concurrently");
    ov.add(run, "--temperature", "/temperature", "Sampling temperature");
    ov.add(run, "--context-budget", "/context_budget_tokens", "Context budget in estimated tokens");
    ov.add(run, "--endpoint", "/provider/url", "Chat-completions endpoint URL");
    ov.add(run, "--model", "/provider/model", "Model name");
    ov.add(run, "--log-requests", "/provider/log_requests", "Append provider requests/responses here");

    std::string log_path, replay_out;
    replay_cmd->add_option("--log", log_path, "Trajectory JSONL log")->required();
    replay_cmd->add_option("--out", replay_out, "Write the replayed log here");

    auto* analyze = app.add_subcommand("analyze", "Stage profiles and transition matrices from a trajectory log");
    std::string analyze_log, analyze_out = "analysis", labels_csv;
    std::size_t stages = 6;
    bool all_trajectories = false, success_only = false;
    analyze->add_option("--log", analyze_log, "Trajectory JSONL log")->required();
    analyze->add_option("--out", analyze_out, "Output directory");
    analyze->add_option("--stages", stages, "Number of stages")->check(CLI::PositiveNumber);
    analyze->add_option("--labels", labels_csv, "Comma-separated tool label order");
    analyze->add_flag("--all-trajectories", all_trajectories, "Profile every trajectory, not only successful ones");
    analyze->add_flag("--success-only", success_only, "Restrict the transition matrix to successful trajectories");

    auto* stats = app.add_subcommand("stats", "Problem counts and mean test counts per task kind");
    ov.add(stats, "--problems", "/problems", "Problem directory or JSONL file");
    bool stats_json = false;
    stats->add_flag("--json", stats_json, "Print JSON instead of a table");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e)
    {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try
    {
        if (analyze->parsed())
            return cmd_analyze(analyze_log, analyze_out, stages, all_trajectories, success_only, labels_csv);

        auto cfg = load_config(config_path);
        ov.apply(cfg);
        if (ingest->parsed())
            return cmd_ingest(cfg);
        if (run->parsed())
            return cmd_run(cfg);
        if (replay_cmd->parsed())
            return cmd_replay(cfg, log_path, replay_out);
        if (stats->parsed())
            return cmd_stats(cfg, stats_json);
    }
    catch (const ila::ConfigError& e)
    {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kExitConfig;
    }
    catch (const ila::LoadError& e)
    {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kExitConfig;
    }
    catch (const ila::IngestError& e)
    {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kExitConfig;
    }
    catch (const ila::BuildError& e)
    {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kExitConfig;
    }
    catch (const std::exception& e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInfra;
    }
    return kExitOk;
}
