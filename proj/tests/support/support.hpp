// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <ila/agent.hpp>
#include <ila/bench.hpp>
#include <ila/docstore.hpp>
#include <ila/retrieval.hpp>
#include <ila/sandbox.hpp>
#include <ila/typeindex.hpp>

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace ila::testing
{

std::filesystem::path fixtures_dir();
std::filesystem::path toolchain_path();
std::filesystem::path cli_path();
std::filesystem::path pebble_path();

ToolchainConfig fixture_toolchain();

/// Temporary directory removed on destruction.
class TempDir
{
public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

void write(const std::filesystem::path& path, const std::string& content);
std::string read(const std::filesystem::path& path);

/// Writes `files` (name -> markdown) plus a manifest listing them in order.
void write_corpus(const std::filesystem::path& dir, const std::vector<std::pair<std::string, std::string>>& files);

/// The bundled documentation, indexes, problems and sandbox, built once.
struct Fixture
{
    DocStore docs;
    HashingEmbedder embedder;
    VectorIndex index;
    TypeIndex types;
    std::vector<Problem> problems;
    Sandbox sandbox;

    Resources resources(bool with_types = true);
    const Problem& problem(const std::string& id) const;
};

Fixture& fixture();

struct CommandResult
{
    int exit_code = -1;
    std::string out;
    std::string err;
};

/// Runs the ila CLI with `args` (each shell-quoted).
CommandResult run_cli(const std::vector<std::string>& args);

} // namespace ila::testing
