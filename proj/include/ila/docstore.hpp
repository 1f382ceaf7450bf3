// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <ila/observation.hpp>

#include <nlohmann/json_fwd.hpp>

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ila
{

/// A section of the documentation tree. The synthetic root has an empty id
/// and level 0.
struct DocNode
{
    std::string id;
    std::string title;
    int level = 0;
    std::vector<std::string> children;
    std::optional<std::string> chunk_id;

    bool operator==(const DocNode&) const = default;
};

/// Body text of one section. chunk_id equals the owning section id.
struct DocChunk
{
    std::string chunk_id;
    std::string section_id;
    std::string text;
    std::size_t token_estimate = 0;

    bool operator==(const DocChunk&) const = default;
};

/// Hierarchical, addressable documentation store. Immutable once built.
///
/// Files are taken in manifest order. `#`, `##` and `###` headings open
/// sections (deeper headings and anything inside fenced code stay body
/// text); a section's chunk is the text between its heading and the next
/// heading of any level. Text before a file's first heading becomes a
/// level-1 section named after the file.
class DocStore
{
public:
    static constexpr std::string_view kRootId = "";
    static constexpr std::string_view kManifestName = "manifest.txt";

    DocStore();

    /// Reads `<docs_root>/manifest.txt` (one markdown path per line, blank
    /// lines and `#` comments ignored). Throws ConfigError when the manifest
    /// is missing or empty and IngestError for unreadable or non-UTF-8 files.
    static DocStore ingest(const std::filesystem::path& docs_root);

    const DocNode& root() const { return nodes_.front(); }
    const DocNode* find(std::string_view id) const;
    const DocChunk* chunk(std::string_view chunk_id) const;

    /// Every node in document order, root first.
    const std::vector<DocNode>& nodes() const { return nodes_; }
    /// Every chunk in document order.
    const std::vector<DocChunk>& chunks() const { return chunks_; }

    /// Indented outline of the subtree under `section_id` (or the root),
    /// `depth` levels deep. Unknown ids produce a miss.
    ToolOutput view_struct(std::optional<std::string_view> section_id, int depth = 2) const;

    /// Full chunk text of a section followed by its child listing.
    ToolOutput view_detail(std::string_view section_id) const;

    nlohmann::json to_json() const;
    static DocStore from_json(const nlohmann::json& j);

    void save(const std::filesystem::path& path) const;
    static DocStore load(const std::filesystem::path& path);

private:
    std::vector<DocNode> nodes_;
    std::vector<DocChunk> chunks_;
    std::map<std::string, std::size_t, std::less<>> node_index_;
    std::map<std::string, std::size_t, std::less<>> chunk_index_;

    void reindex();
    void validate() const;
    void outline(const DocNode& node, int indent, int remaining, std::string& out) const;

    friend class DocStoreBuilder;
};

/// Miss text for an unknown section id; shared by every structural view.
std::string section_not_found(std::string_view id);

} // namespace ila
