// SPDX-License-Identifier: Apache-2.0
#include "support.hpp"

#include <ila/error.hpp>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <sys/wait.h>
#include <unistd.h>

namespace fs = std::filesystem;

namespace ila::testing
{

fs::path fixtures_dir()
{
    return ILA_FIXTURES;
}

fs::path toolchain_path()
{
    return ILA_TOOLCHAIN;
}

fs::path cli_path()
{
    return ILA_CLI;
}

fs::path pebble_path()
{
    return ILA_PEBBLE;
}

ToolchainConfig fixture_toolchain()
{
    return ToolchainConfig::load(toolchain_path());
}

TempDir::TempDir()
{
    auto tmpl = (fs::temp_directory_path() / "ila-test-XXXXXX").string();
    std::vector<char> buf(tmpl.begin(), tmpl.end());
    buf.push_back('\0');
    if (!::mkdtemp(buf.data()))
        throw std::runtime_error("mkdtemp failed");
    path_ = buf.data();
}

TempDir::~TempDir()
{
    std::error_code ec;
    fs::remove_all(path_, ec);
}

void write(const fs::path& path, const std::string& content)
{
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    out << content;
}

std::string read(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot read " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_corpus(const fs::path& dir, const std::vector<std::pair<std::string, std::string>>& files)
{
    std::string manifest;
    for (const auto& [name, content] : files)
    {
        write(dir / name, content);
        manifest += name + "\n";
    }
    write(dir / "manifest.txt", manifest);
}

Resources Fixture::resources(bool with_types)
{
    return {&docs, &index, &embedder, with_types ? &types : nullptr, &sandbox};
}

const Problem& Fixture::problem(const std::string& id) const
{
    for (const auto& p : problems)
        if (p.id == id)
            return p;
    throw std::runtime_error("no fixture problem " + id);
}

namespace
{

Fixture build_fixture()
{
    auto docs = DocStore::ingest(fixtures_dir() / "docs");
    HashingEmbedder embedder;
    auto index = VectorIndex::build(docs, embedder);
    auto types = TypeIndex::build(docs, TypeIndex::read_manifest(fixtures_dir() / "types.json"));
    auto problems = load_problems(fixtures_dir() / "problems");
    return Fixture{std::move(docs), embedder, std::move(index), std::move(types), std::move(problems),
                   Sandbox(fixture_toolchain())};
}

} // namespace

Fixture& fixture()
{
    static Fixture f = build_fixture();
    return f;
}

namespace
{

std::string quote(const std::string& s)
{
    std::string out = "'";
    for (char c : s)
        out += c == '\'' ? std::string("'\\''") : std::string(1, c);
    return out + "'";
}

} // namespace

CommandResult run_cli(const std::vector<std::string>& args)
{
    TempDir tmp;
    std::string cmd = quote(cli_path().string());
    for (const auto& a : args)
        cmd += " " + quote(a);
    cmd += " >" + quote((tmp / "out").string()) + " 2>" + quote((tmp / "err").string());
    int status = std::system(cmd.c_str());
    CommandResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = read(tmp / "out");
    r.err = read(tmp / "err");
    return r;
}

} // namespace ila::testing
