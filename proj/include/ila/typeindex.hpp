// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <ila/docstore.hpp>
#include <ila/observation.hpp>

#include <nlohmann/json_fwd.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ila
{

struct MemberSummary
{
    std::string signature;
    std::string description;

    bool operator==(const MemberSummary&) const = default;
};

enum class TypeSource
{
    Manifest,
    Heuristic,
};

struct TypeEntry
{
    std::string name;
    std::vector<std::string> aliases;
    std::vector<std::string> section_ids;
    std::vector<MemberSummary> member_summaries;
    TypeSource source = TypeSource::Heuristic;

    bool operator==(const TypeEntry&) const = default;
};

struct TypeIndexOptions
{
    /// ECMAScript patterns matched against section titles; capture group 1
    /// is the entity name.
    std::vector<std::string> heading_patterns = default_heading_patterns();
    /// Run the heading heuristic. Manifest entries win on name clashes.
    bool use_heuristic = true;

    static std::vector<std::string> default_heading_patterns();
};

inline constexpr std::size_t kMaxTypeSuggestions = 5;

/// Name -> documentation entity map backing the TypeLookup primitive.
class TypeIndex
{
public:
    /// `manifest` maps a type name to either an array of section ids or an
    /// object {"aliases": [...], "section_ids": [...]}. Throws BuildError when
    /// it names a section the store does not have.
    static TypeIndex build(const DocStore& store,
                           const std::optional<nlohmann::json>& manifest,
                           const TypeIndexOptions& options = {});

    static nlohmann::json read_manifest(const std::filesystem::path& path);

    const std::vector<TypeEntry>& entries() const { return entries_; }
    const TypeEntry* find(std::string_view name) const;

    /// Exact name, then alias, then case-insensitive match. Misses carry up
    /// to five suggestions ranked by shared prefix length, then name.
    ToolOutput lookup(const DocStore& store, std::string_view name) const;

    std::vector<std::string> suggestions(std::string_view name) const;

    nlohmann::json to_json() const;
    static TypeIndex from_json(const nlohmann::json& j, const DocStore& store);
    void save(const std::filesystem::path& path) const;
    static TypeIndex load(const std::filesystem::path& path, const DocStore& store);

private:
    std::vector<TypeEntry> entries_;  // sorted by name

    const TypeEntry* resolve(std::string_view name) const;
};

std::string_view to_string(TypeSource source);

} // namespace ila
