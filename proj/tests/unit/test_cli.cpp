// SPDX-License-Identifier: Apache-2.0
#include "../support/support.hpp"

#include <nlohmann/json.hpp>

#include <catch_amalgamated.hpp>

#include <filesystem>

using namespace ila::testing;
using nlohmann::json;
namespace fs = std::filesystem;

namespace
{

std::string config()
{
    return (fixtures_dir() / "config.json").string();
}

CommandResult ingest(const fs::path& out)
{
    return run_cli({"-c", config(), "ingest", "--out", out.string()});
}

CommandResult run(const fs::path& artifacts, const fs::path& out, std::vector<std::string> extra = {})
{
    std::vector<std::string> args{"-c",          config(),          "run",   "--toolchain", toolchain_path().string(),
                                  "--artifacts", artifacts.string(), "--out", out.string()};
    args.insert(args.end(), extra.begin(), extra.end());
    return run_cli(args);
}

/// Artifacts built once for every test in this file.
const fs::path& artifacts()
{
    static TempDir dir;
    static bool built = [] {
        auto r = ingest(dir.path());
        INFO(r.err);
        REQUIRE(r.exit_code == 0);
        return true;
    }();
    (void)built;
    return dir.path();
}

} // namespace

TEST_CASE("ingest writes reproducible artifacts")
{
    const auto& a = artifacts();
    for (const char* name : {"docstore.json", "index.json", "types.json"})
        CHECK(fs::exists(a / name));
    TempDir again;
    REQUIRE(ingest(again.path()).exit_code == 0);
    for (const char* name : {"docstore.json", "index.json", "types.json"})
        CHECK(read(a / name) == read(again / name));
}

TEST_CASE("ingest without a manifest is a configuration error")
{
    TempDir docs, out;
    write(docs / "a.md", "# A\nbody\n");
    auto r = run_cli({"ingest", "--docs", docs.path().string(), "--out", out.path().string()});
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("manifest") != std::string::npos);
}

TEST_CASE("unknown flags are configuration errors")
{
    CHECK(run_cli({"run", "--frobnicate"}).exit_code == 2);
    CHECK(run_cli({}).exit_code == 2);
}

TEST_CASE("scripted agent run writes logs and a report")
{
    TempDir out;
    auto r = run(artifacts(), out.path());
    INFO(r.err);
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("ACC") != std::string::npos);
    for (const char* name : {"trajectories.jsonl", "report.json", "report.txt", "timings.jsonl", "meta.json"})
        CHECK(fs::exists(out / name));
    auto report = json::parse(read(out / "report.json"));
    CHECK(report["mode"] == "ila-agent");
    CHECK(read(out / "trajectories.jsonl").find("PRIVATE-SENTINEL") == std::string::npos);
    CHECK(read(out / "trajectories.jsonl").find("wall_time_ms") == std::string::npos);

    SECTION("replay reproduces the log")
    {
        TempDir rep;
        auto rr = run_cli({"-c", config(), "replay", "--toolchain", toolchain_path().string(), "--artifacts",
                           artifacts().string(), "--log", (out / "trajectories.jsonl").string(), "--out",
                           (rep / "replayed.jsonl").string()});
        INFO(rr.err);
        CHECK(rr.exit_code == 0);
        CHECK(read(rep / "replayed.jsonl") == read(out / "trajectories.jsonl"));

        TempDir a1, a2;
        REQUIRE(run_cli({"analyze", "--log", (out / "trajectories.jsonl").string(), "--out", a1.path().string()})
                    .exit_code == 0);
        REQUIRE(run_cli({"analyze", "--log", (rep / "replayed.jsonl").string(), "--out", a2.path().string()})
                    .exit_code == 0);
        for (const char* name : {"stage_profile.csv", "transitions.csv", "stage_profile.svg", "transitions.svg"})
        {
            CHECK(fs::exists(a1 / name));
            CHECK(read(a1 / name) == read(a2 / name));
        }
    }
    SECTION("analyze honours the stage count")
    {
        TempDir a;
        REQUIRE(run_cli({"analyze", "--log", (out / "trajectories.jsonl").string(), "--out", a.path().string(),
                         "--stages", "4"})
                    .exit_code == 0);
        auto csv = read(a / "stage_profile.csv");
        CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
    }
}

TEST_CASE("zero-shot runs without any index")
{
    TempDir empty, out;
    auto r = run(empty.path(), out.path(), {"--mode", "zero-shot", "--policy", "reference"});
    INFO(r.err);
    CHECK(r.exit_code == 0);
    auto report = json::parse(read(out / "report.json"));
    CHECK(report["mode"] == "zero-shot");
}

TEST_CASE("agent mode names the missing index")
{
    TempDir empty, out;
    auto r = run(empty.path(), out.path());
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("docstore.json") != std::string::npos);
}

TEST_CASE("corpus statistics")
{
    auto r = run_cli({"-c", config(), "stats", "--json"});
    REQUIRE(r.exit_code == 0);
    auto j = json::parse(r.out);
    CHECK(j.dump().find("12") != std::string::npos);
    auto table = run_cli({"-c", config(), "stats"});
    CHECK(table.out.find("repair") != std::string::npos);
}

TEST_CASE("analyze rejects a corrupt log")
{
    TempDir dir;
    write(dir / "bad.jsonl", "nope\nnope\n");
    auto r = run_cli({"analyze", "--log", (dir / "bad.jsonl").string(), "--out", (dir / "o").string()});
    CHECK(r.exit_code != 0);
    CHECK_FALSE(r.err.empty());
}
