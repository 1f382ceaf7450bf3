// SPDX-License-Identifier: Apache-2.0
#include <ila/error.hpp>
#include <ila/text.hpp>
#include <ila/typeindex.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <regex>

namespace ila
{

std::string_view to_string(TypeSource source)
{
    return source == TypeSource::Manifest ? "manifest" : "heuristic";
}

std::vector<std::string> TypeIndexOptions::default_heading_patterns()
{
    return {R"(^(?:class|struct|interface|enum|extend)\s+([A-Za-z_][A-Za-z0-9_]*))"};
}

namespace
{

std::string first_line(std::string_view body)
{
    for (const auto& line : text::split_lines(body))
    {
        auto t = text::trim(line);
        if (!t.empty() && t.rfind("```", 0) != 0)
            return t;
    }
    return {};
}

std::vector<MemberSummary> members_of(const DocStore& store, const std::vector<std::string>& section_ids)
{
    std::vector<MemberSummary> out;
    for (const auto& id : section_ids)
    {
        const DocNode* node = store.find(id);
        for (const auto& child_id : node->children)
        {
            const DocNode* child = store.find(child_id);
            std::string desc;
            if (child->chunk_id)
                desc = first_line(store.chunk(*child->chunk_id)->text);
            out.push_back({child->title, desc});
        }
    }
    return out;
}

std::size_t common_prefix_ci(std::string_view a, std::string_view b)
{
    std::size_t n = 0;
    while (n < a.size() && n < b.size() &&
           std::tolower(static_cast<unsigned char>(a[n])) == std::tolower(static_cast<unsigned char>(b[n])))
        ++n;
    return n;
}

} // namespace

TypeIndex TypeIndex::build(const DocStore& store,
                           const std::optional<nlohmann::json>& manifest,
                           const TypeIndexOptions& options)
{
    std::map<std::string, TypeEntry> by_name;

    if (options.use_heuristic)
    {
        std::vector<std::regex> patterns;
        for (const auto& p : options.heading_patterns)
        {
            try
            {
                patterns.emplace_back(p);
            }
            catch (const std::regex_error& e)
            {
                throw ConfigError("invalid type heading pattern '" + p + "': " + e.what());
            }
        }
        for (const auto& node : store.nodes())
        {
            for (const auto& re : patterns)
            {
                std::smatch m;
                if (!std::regex_search(node.title, m, re) || m.size() < 2 || !m[1].matched)
                    continue;
                auto& entry = by_name[m[1].str()];
                entry.name = m[1].str();
                entry.source = TypeSource::Heuristic;
                entry.section_ids.push_back(node.id);
                break;
            }
        }
    }

    if (manifest)
    {
        if (!manifest->is_object())
            throw BuildError("type manifest must be a JSON object");
        for (const auto& [name, spec] : manifest->items())
        {
            TypeEntry entry;
            entry.name = name;
            entry.source = TypeSource::Manifest;
            try
            {
                if (spec.is_array())
                    entry.section_ids = spec.get<std::vector<std::string>>();
                else
                {
                    entry.section_ids = spec.at("section_ids").get<std::vector<std::string>>();
                    if (spec.contains("aliases"))
                        entry.aliases = spec.at("aliases").get<std::vector<std::string>>();
                }
            }
            catch (const nlohmann::json::exception&)
            {
                throw BuildError("type manifest entry '" + name + "' is malformed");
            }
            if (entry.section_ids.empty())
                throw BuildError("type manifest entry '" + name + "' lists no sections");
            for (const auto& id : entry.section_ids)
                if (!store.find(id) || id == DocStore::kRootId)
                    throw BuildError("type manifest entry '" + name + "' references unknown section '" + id + "'");
            by_name[name] = std::move(entry);
        }
    }

    TypeIndex index;
    for (auto& [name, entry] : by_name)
    {
        entry.member_summaries = members_of(store, entry.section_ids);
        index.entries_.push_back(std::move(entry));
    }
    return index;
}

nlohmann::json TypeIndex::read_manifest(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot read type manifest: " + path.string());
    try
    {
        return nlohmann::json::parse(in);
    }
    catch (const nlohmann::json::exception& e)
    {
        throw ConfigError("malformed type manifest " + path.string() + ": " + e.what());
    }
}

const TypeEntry* TypeIndex::find(std::string_view name) const
{
    auto it = std::lower_bound(entries_.begin(), entries_.end(), name,
                               [](const TypeEntry& e, std::string_view n) { return e.name < n; });
    return it != entries_.end() && it->name == name ? &*it : nullptr;
}

const TypeEntry* TypeIndex::resolve(std::string_view name) const
{
    if (const auto* e = find(name))
        return e;
    for (const auto& e : entries_)
        if (std::find(e.aliases.begin(), e.aliases.end(), name) != e.aliases.end())
            return &e;
    auto lowered = text::to_lower_ascii(name);
    for (const auto& e : entries_)
    {
        if (text::to_lower_ascii(e.name) == lowered)
            return &e;
        for (const auto& a : e.aliases)
            if (text::to_lower_ascii(a) == lowered)
                return &e;
    }
    return nullptr;
}

std::vector<std::string> TypeIndex::suggestions(std::string_view name) const
{
    std::vector<std::pair<std::size_t, const std::string*>> ranked;
    for (const auto& e : entries_)
        if (auto n = common_prefix_ci(name, e.name); n > 0)
            ranked.emplace_back(n, &e.name);
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first)
            return a.first > b.first;
        return *a.second < *b.second;
    });
    std::vector<std::string> out;
    for (std::size_t i = 0; i < ranked.size() && i < kMaxTypeSuggestions; ++i)
        out.push_back(*ranked[i].second);
    return out;
}

ToolOutput TypeIndex::lookup(const DocStore& store, std::string_view name) const
{
    const TypeEntry* e = resolve(name);
    if (!e)
    {
        std::string out = "type not found: " + std::string(name) + "\n";
        auto similar = suggestions(name);
        if (similar.empty())
            out += "No similar type names.\n";
        else
        {
            out += "Did you mean: ";
            for (std::size_t i = 0; i < similar.size(); ++i)
                out += (i ? ", " : "") + similar[i];
            out += "\n";
        }
        return ToolOutput::miss(std::move(out));
    }

    std::string out = "Type " + e->name + "\n";
    if (!e->aliases.empty())
    {
        out += "Aliases: ";
        for (std::size_t i = 0; i < e->aliases.size(); ++i)
            out += (i ? ", " : "") + e->aliases[i];
        out += "\n";
    }
    for (const auto& id : e->section_ids)
    {
        const DocNode* node = store.find(id);
        out += "\n== " + node->title + " [" + id + "] ==\n";
        if (node->chunk_id)
            out += store.chunk(*node->chunk_id)->text + "\n";
    }
    if (!e->member_summaries.empty())
    {
        out += "\nMembers:\n";
        for (const auto& m : e->member_summaries)
            out += "- " + m.signature + (m.description.empty() ? "" : ": " + m.description) + "\n";
    }
    return ToolOutput::result(std::move(out));
}

nlohmann::json TypeIndex::to_json() const
{
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& e : entries_)
    {
        nlohmann::json members = nlohmann::json::array();
        for (const auto& m : e.member_summaries)
            members.push_back({{"signature", m.signature}, {"description", m.description}});
        entries.push_back({{"name", e.name},
                           {"aliases", e.aliases},
                           {"section_ids", e.section_ids},
                           {"member_summaries", std::move(members)},
                           {"source", to_string(e.source)}});
    }
    return {{"format", "ila-type-index"}, {"version", 1}, {"entries", std::move(entries)}};
}

TypeIndex TypeIndex::from_json(const nlohmann::json& j, const DocStore& store)
{
    TypeIndex index;
    try
    {
        if (j.at("format") != "ila-type-index")
            throw LoadError("not a type index file");
        for (const auto& e : j.at("entries"))
        {
            TypeEntry entry;
            entry.name = e.at("name").get<std::string>();
            entry.aliases = e.at("aliases").get<std::vector<std::string>>();
            entry.section_ids = e.at("section_ids").get<std::vector<std::string>>();
            for (const auto& m : e.at("member_summaries"))
                entry.member_summaries.push_back(
                    {m.at("signature").get<std::string>(), m.at("description").get<std::string>()});
            entry.source = e.at("source") == "manifest" ? TypeSource::Manifest : TypeSource::Heuristic;
            for (const auto& id : entry.section_ids)
                if (!store.find(id))
                    throw LoadError("type '" + entry.name + "' references unknown section '" + id + "'");
            index.entries_.push_back(std::move(entry));
        }
    }
    catch (const nlohmann::json::exception& e)
    {
        throw LoadError(std::string("malformed type index: ") + e.what());
    }
    std::sort(index.entries_.begin(), index.entries_.end(),
              [](const TypeEntry& a, const TypeEntry& b) { return a.name < b.name; });
    for (std::size_t i = 1; i < index.entries_.size(); ++i)
        if (index.entries_[i].name == index.entries_[i - 1].name)
            throw LoadError("duplicate type name '" + index.entries_[i].name + "'");
    return index;
}

void TypeIndex::save(const std::filesystem::path& path) const
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write " + path.string());
    out << to_json().dump(1) << '\n';
}

TypeIndex TypeIndex::load(const std::filesystem::path& path, const DocStore& store)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw LoadError("cannot read type index: " + path.string());
    try
    {
        return from_json(nlohmann::json::parse(in), store);
    }
    catch (const nlohmann::json::parse_error& e)
    {
        throw LoadError("malformed type index " + path.string() + ": " + e.what());
    }
}

} // namespace ila
