// SPDX-License-Identifier: Apache-2.0
#include <ila/docstore.hpp>
#include <ila/error.hpp>
#include <ila/text.hpp>

#include <nlohmann/json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace ila
{

namespace fs = std::filesystem;

std::string section_not_found(std::string_view id)
{
    return "section not found: " + std::string(id);
}

namespace
{

std::string read_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IngestError("cannot read documentation file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad())
        throw IngestError("cannot read documentation file: " + path.string());
    return buf.str();
}

struct Heading
{
    int level;
    std::string title;
};

/// ATX heading of level 1-3, or nothing.
std::optional<Heading> parse_heading(std::string_view line)
{
    int hashes = 0;
    while (hashes < static_cast<int>(line.size()) && line[hashes] == '#')
        ++hashes;
    if (hashes < 1 || hashes > 3 || hashes >= static_cast<int>(line.size()))
        return std::nullopt;
    if (line[hashes] != ' ' && line[hashes] != '\t')
        return std::nullopt;
    auto title = text::trim(line.substr(hashes));
    // closing sequence: "## Title ##"
    auto last = title.find_last_not_of('#');
    if (last != std::string::npos && last + 1 < title.size() && (title[last] == ' ' || title[last] == '\t'))
        title = text::trim(title.substr(0, last + 1));
    if (title.empty())
        return std::nullopt;
    return Heading{hashes, title};
}

bool is_fence(std::string_view line)
{
    auto t = text::trim(line);
    return t.rfind("```", 0) == 0 || t.rfind("~~~", 0) == 0;
}

std::string body_text(const std::vector<std::string>& lines)
{
    std::size_t first = 0;
    while (first < lines.size() && text::trim(lines[first]).empty())
        ++first;
    std::string out;
    for (std::size_t i = first; i < lines.size(); ++i)
    {
        out += lines[i];
        out += '\n';
    }
    return text::rtrim(out);
}

} // namespace

/// Accumulates nodes and chunks while scanning files in manifest order.
class DocStoreBuilder
{
public:
    DocStoreBuilder()
    {
        store_.nodes_.push_back(DocNode{std::string(DocStore::kRootId), "Documentation", 0, {}, std::nullopt});
        used_.insert(std::string(DocStore::kRootId));
    }

    void add_file(const fs::path& file, const std::string& content)
    {
        if (!text::is_valid_utf8(content))
            throw IngestError("documentation file is not valid UTF-8: " + file.string());

        stack_.clear();
        current_ = std::nullopt;
        pending_.clear();
        bool in_fence = false;
        bool seen_heading = false;

        for (const auto& line : text::split_lines(content))
        {
            if (is_fence(line))
                in_fence = !in_fence;
            std::optional<Heading> heading = in_fence || is_fence(line) ? std::nullopt : parse_heading(line);
            if (!heading)
            {
                pending_.push_back(line);
                continue;
            }
            if (!seen_heading)
            {
                seen_heading = true;
                if (!body_text(pending_).empty())
                    open_preamble(file);
            }
            flush();
            open_heading(*heading);
        }
        if (!seen_heading && !body_text(pending_).empty())
            open_preamble(file);
        flush();
    }

    DocStore finish() &&
    {
        store_.reindex();
        store_.validate();
        return std::move(store_);
    }

private:
    DocStore store_;
    std::set<std::string> used_;
    // (markdown heading level, node index); preamble sections use level 0
    std::vector<std::pair<int, std::size_t>> stack_;
    std::optional<std::size_t> current_;
    std::vector<std::string> pending_;

    std::string unique_id(const std::string& wanted)
    {
        std::string id = wanted;
        for (int n = 2; used_.count(id); ++n)
            id = wanted + "-" + std::to_string(n);
        used_.insert(id);
        return id;
    }

    std::size_t add_node(std::size_t parent, const std::string& title)
    {
        const auto& p = store_.nodes_[parent];
        std::string slug = text::slugify(title);
        std::string id = unique_id(p.id.empty() ? slug : p.id + "/" + slug);
        int level = p.level + 1;
        store_.nodes_.push_back(DocNode{id, title, level, {}, std::nullopt});
        store_.nodes_[parent].children.push_back(id);
        return store_.nodes_.size() - 1;
    }

    void open_preamble(const fs::path& file)
    {
        current_ = add_node(0, file.stem().string());
        // Preamble sections are siblings of the file's headings, not parents.
    }

    void open_heading(const Heading& h)
    {
        while (!stack_.empty() && stack_.back().first >= h.level)
            stack_.pop_back();
        std::size_t parent = stack_.empty() ? 0 : stack_.back().second;
        std::size_t idx = add_node(parent, h.title);
        stack_.emplace_back(h.level, idx);
        current_ = idx;
    }

    void flush()
    {
        if (current_)
        {
            auto body = body_text(pending_);
            if (!body.empty())
            {
                auto& node = store_.nodes_[*current_];
                node.chunk_id = node.id;
                store_.chunks_.push_back(DocChunk{node.id, node.id, body, text::token_estimate(body)});
            }
        }
        pending_.clear();
    }
};

DocStore::DocStore() = default;

DocStore DocStore::ingest(const fs::path& docs_root)
{
    auto manifest = docs_root / kManifestName;
    if (!fs::exists(manifest))
        throw ConfigError("documentation manifest not found: " + manifest.string());
    std::ifstream in(manifest);
    if (!in)
        throw ConfigError("cannot read documentation manifest: " + manifest.string());

    std::vector<fs::path> files;
    std::string line;
    while (std::getline(in, line))
    {
        auto t = text::trim(line);
        if (t.empty() || t.front() == '#')
            continue;
        files.push_back(docs_root / t);
    }
    if (files.empty())
        throw ConfigError("documentation manifest lists no files: " + manifest.string());

    DocStoreBuilder builder;
    for (const auto& file : files)
        builder.add_file(file, read_file(file));
    return std::move(builder).finish();
}

const DocNode* DocStore::find(std::string_view id) const
{
    auto it = node_index_.find(id);
    return it == node_index_.end() ? nullptr : &nodes_[it->second];
}

const DocChunk* DocStore::chunk(std::string_view chunk_id) const
{
    auto it = chunk_index_.find(chunk_id);
    return it == chunk_index_.end() ? nullptr : &chunks_[it->second];
}

void DocStore::outline(const DocNode& node, int indent, int remaining, std::string& out) const
{
    out.append(static_cast<std::size_t>(indent) * 2, ' ');
    out += "- " + node.title + " [" + node.id + "]";
    if (remaining == 0 && !node.children.empty())
        out += " (" + std::to_string(node.children.size()) + " subsections)";
    out += '\n';
    if (remaining == 0)
        return;
    for (const auto& child : node.children)
        outline(*find(child), indent + 1, remaining - 1, out);
}

ToolOutput DocStore::view_struct(std::optional<std::string_view> section_id, int depth) const
{
    if (depth < 1)
        return ToolOutput::error("depth must be at least 1");
    std::string out;
    if (!section_id || *section_id == kRootId)
    {
        for (const auto& child : root().children)
            outline(*find(child), 0, depth - 1, out);
        if (out.empty())
            out = "(documentation is empty)\n";
        return ToolOutput::result(std::move(out));
    }
    const DocNode* node = find(*section_id);
    if (!node)
        return ToolOutput::miss(section_not_found(*section_id));
    outline(*node, 0, depth, out);
    return ToolOutput::result(std::move(out));
}

ToolOutput DocStore::view_detail(std::string_view section_id) const
{
    const DocNode* node = find(section_id);
    if (!node || node->id == kRootId)
        return ToolOutput::miss(section_not_found(section_id));

    std::string children;
    for (const auto& c : node->children)
        children += (children.empty() ? "" : ", ") + c;
    if (children.empty())
        children = "(none)";

    std::string out;
    if (node->chunk_id)
        out = chunk(*node->chunk_id)->text + "\n\n";
    else
        out = "(section '" + node->id + "' has no body text; see its subsections)\n";
    out += "Subsections: " + children + "\n";
    return ToolOutput::result(std::move(out));
}

void DocStore::reindex()
{
    node_index_.clear();
    chunk_index_.clear();
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        if (!node_index_.emplace(nodes_[i].id, i).second)
            throw LoadError("duplicate section id: " + nodes_[i].id);
    for (std::size_t i = 0; i < chunks_.size(); ++i)
        if (!chunk_index_.emplace(chunks_[i].chunk_id, i).second)
            throw LoadError("duplicate chunk id: " + chunks_[i].chunk_id);
}

void DocStore::validate() const
{
    if (nodes_.empty() || nodes_.front().id != kRootId || nodes_.front().level != 0)
        throw LoadError("document store has no root node");
    // single tree: every non-root node has exactly one parent and is reachable
    std::map<std::string_view, int> parents;
    for (const auto& n : nodes_)
        for (const auto& c : n.children)
        {
            const DocNode* child = find(c);
            if (!child)
                throw LoadError("section '" + n.id + "' lists unknown child '" + c + "'");
            if (child->level != n.level + 1)
                throw LoadError("section '" + c + "' has inconsistent level");
            if (++parents[c] > 1 || c == kRootId)
                throw LoadError("section '" + c + "' has more than one parent");
        }
    if (parents.size() + 1 != nodes_.size())
        throw LoadError("document store is not a single tree");
    for (const auto& n : nodes_)
        if (n.chunk_id)
        {
            const DocChunk* ch = chunk(*n.chunk_id);
            if (!ch || ch->section_id != n.id)
                throw LoadError("section '" + n.id + "' points at a missing chunk");
        }
    for (const auto& ch : chunks_)
    {
        const DocNode* n = find(ch.section_id);
        if (!n || n->chunk_id != ch.chunk_id)
            throw LoadError("chunk '" + ch.chunk_id + "' is not owned by its section");
        if (ch.text.empty())
            throw LoadError("chunk '" + ch.chunk_id + "' is empty");
    }
}

nlohmann::json DocStore::to_json() const
{
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : nodes_)
    {
        nlohmann::json j = {{"id", n.id}, {"title", n.title}, {"level", n.level}, {"children", n.children}};
        j["chunk_id"] = n.chunk_id ? nlohmann::json(*n.chunk_id) : nlohmann::json(nullptr);
        nodes.push_back(std::move(j));
    }
    nlohmann::json chunks = nlohmann::json::array();
    for (const auto& c : chunks_)
        chunks.push_back({{"chunk_id", c.chunk_id},
                          {"section_id", c.section_id},
                          {"text", c.text},
                          {"token_estimate", c.token_estimate}});
    return {{"format", "ila-docstore"}, {"version", 1}, {"nodes", std::move(nodes)}, {"chunks", std::move(chunks)}};
}

DocStore DocStore::from_json(const nlohmann::json& j)
{
    DocStore store;
    try
    {
        if (j.at("format") != "ila-docstore")
            throw LoadError("not a document store file");
        for (const auto& n : j.at("nodes"))
        {
            DocNode node;
            node.id = n.at("id").get<std::string>();
            node.title = n.at("title").get<std::string>();
            node.level = n.at("level").get<int>();
            node.children = n.at("children").get<std::vector<std::string>>();
            if (!n.at("chunk_id").is_null())
                node.chunk_id = n.at("chunk_id").get<std::string>();
            store.nodes_.push_back(std::move(node));
        }
        for (const auto& c : j.at("chunks"))
            store.chunks_.push_back(DocChunk{c.at("chunk_id").get<std::string>(),
                                             c.at("section_id").get<std::string>(),
                                             c.at("text").get<std::string>(),
                                             c.at("token_estimate").get<std::size_t>()});
    }
    catch (const nlohmann::json::exception& e)
    {
        throw LoadError(std::string("malformed document store: ") + e.what());
    }
    store.reindex();
    store.validate();
    return store;
}

void DocStore::save(const fs::path& path) const
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write " + path.string());
    out << to_json().dump(1) << '\n';
    if (!out)
        throw IoError("cannot write " + path.string());
}

DocStore DocStore::load(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw LoadError("cannot read document store: " + path.string());
    nlohmann::json j;
    try
    {
        in >> j;
    }
    catch (const nlohmann::json::exception& e)
    {
        throw LoadError("malformed document store " + path.string() + ": " + e.what());
    }
    return from_json(j);
}

} // namespace ila
