#include "ctirag/util.hpp"
#include "test_helpers.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sys/wait.h>

using namespace ctirag;
using ctirag::testing::asset_dir;
using ctirag::testing::cli_path;
using ctirag::testing::data_dir;
using ctirag::testing::TempDir;
using ctirag::testing::template_dir;

namespace {

struct RunResult {
    int exit_code = -1;
    std::string output; // stdout + stderr
};

RunResult run_cli(const TempDir& tmp, const std::string& args) {
    std::string out_file = tmp.file("cli-out-" + fnv1a64_hex(args) + ".txt");
    std::string base = cli_path() +
                       " --set templates.dir=" + template_dir() +
                       " --set gateway.mock_script=" + asset_dir() + "/mock_responses.json" +
                       " --set intel.fixture_path=" + asset_dir() + "/intel_fixtures.json" +
                       " --set kb.store_path=" + tmp.file("kb.store") + " --set kb.dim=64 ";
    int status = std::system((base + args + " >" + out_file + " 2>&1").c_str());
    RunResult result;
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    result.output = read_file(out_file);
    return result;
}

} // namespace

TEST_CASE("simulate writes identical bytes for identical invocations") {
    TempDir tmp;
    auto r1 = run_cli(tmp, "simulate --count 10 --seed 3 --out " + tmp.file("a1.jsonl") +
                               " --scenarios-out " + tmp.file("scenarios.jsonl"));
    auto r2 = run_cli(tmp, "simulate --count 10 --seed 3 --out " + tmp.file("a2.jsonl"));
    CHECK(r1.exit_code == 0);
    CHECK(r2.exit_code == 0);
    CHECK(read_file(tmp.file("a1.jsonl")) == read_file(tmp.file("a2.jsonl")));

    auto r3 = run_cli(tmp, "simulate --count 10 --seed 4 --out " + tmp.file("a3.jsonl"));
    CHECK(read_file(tmp.file("a1.jsonl")) != read_file(tmp.file("a3.jsonl")));

    // scenario export carries the full table
    std::string scenarios = read_file(tmp.file("scenarios.jsonl"));
    CHECK(contains(scenarios, "\"adversary\":\"Advanced Thief\""));
    CHECK(contains(scenarios, "\"technique_id\":\"T1055.002\""));
}

TEST_CASE("ingest: empty corpus exits 0, missing manifest entries exit 2") {
    TempDir tmp;
    std::filesystem::create_directories(tmp.file("empty"));
    write_file(tmp.file("manifest.json"), "{}");
    auto empty = run_cli(tmp, "ingest --corpus " + tmp.file("empty") + " --manifest " +
                                  tmp.file("manifest.json"));
    CHECK(empty.exit_code == 0);
    CHECK(contains(empty.output, "0 documents"));

    std::filesystem::create_directories(tmp.file("corpus"));
    write_file(tmp.file("corpus/known.txt"), "document body about exfiltration");
    write_file(tmp.file("corpus/orphan.txt"), "no manifest entry for this one");
    write_file(tmp.file("manifest.json"),
               R"({"known.txt": {"doc_id": "known", "title": "Known"}})");
    auto partial = run_cli(tmp, "ingest --corpus " + tmp.file("corpus") + " --manifest " +
                                    tmp.file("manifest.json"));
    CHECK(partial.exit_code == 2);
    CHECK(contains(partial.output, "orphan.txt"));
    CHECK(contains(partial.output, "known: 1 chunks"));

    auto bad = run_cli(tmp, "ingest --corpus " + tmp.file("nope") + " --manifest " +
                                tmp.file("manifest.json"));
    CHECK(bad.exit_code == 1);
}

TEST_CASE("respond: absent store is a config error with an actionable message") {
    TempDir tmp;
    run_cli(tmp, "simulate --count 2 --seed 1 --out " + tmp.file("alerts.jsonl"));
    auto res = run_cli(tmp, "respond --alerts " + tmp.file("alerts.jsonl") + " --out " +
                                tmp.file("packages.jsonl"));
    CHECK(res.exit_code == 1);
    CHECK(contains(res.output, "ingest"));
}

TEST_CASE("respond: malformed batch lines are reported, the rest processed") {
    TempDir tmp;
    // build a store first
    std::filesystem::create_directories(tmp.file("corpus"));
    write_file(tmp.file("corpus/doc.txt"), "report about collection and exfiltration over c2");
    write_file(tmp.file("manifest.json"), R"({"doc.txt": {"doc_id": "doc", "title": "Doc"}})");
    CHECK(run_cli(tmp, "ingest --corpus " + tmp.file("corpus") + " --manifest " +
                           tmp.file("manifest.json"))
              .exit_code == 0);

    run_cli(tmp, "simulate --count 2 --seed 5 --out " + tmp.file("alerts.jsonl"));
    std::string batch = read_file(tmp.file("alerts.jsonl"));
    write_file(tmp.file("alerts.jsonl"), "BROKEN LINE\n" + batch);

    auto res = run_cli(tmp, "respond --alerts " + tmp.file("alerts.jsonl") + " --out " +
                                tmp.file("packages.jsonl"));
    CHECK(res.exit_code == 0);
    CHECK(contains(res.output, "alerts.jsonl:1"));
    CHECK(contains(res.output, "2/2 alerts produced packages"));

    // plans rendering sits next to the packages file
    CHECK(std::filesystem::exists(tmp.file("packages.plans.txt")));
}

TEST_CASE("respond: --jobs parallelism still answers every alert") {
    TempDir tmp;
    std::filesystem::create_directories(tmp.file("corpus"));
    write_file(tmp.file("corpus/doc.txt"), "report about collection and exfiltration over c2");
    write_file(tmp.file("manifest.json"), R"({"doc.txt": {"doc_id": "doc", "title": "Doc"}})");
    run_cli(tmp, "ingest --corpus " + tmp.file("corpus") + " --manifest " +
                     tmp.file("manifest.json"));
    run_cli(tmp, "simulate --count 12 --seed 6 --out " + tmp.file("alerts.jsonl"));

    auto res = run_cli(tmp, "--set run.deterministic=off respond --jobs 4 --alerts " +
                                tmp.file("alerts.jsonl") + " --out " + tmp.file("packages.jsonl"));
    CHECK(res.exit_code == 0);
    CHECK(contains(res.output, "12/12 alerts produced packages"));
    std::ifstream in(tmp.file("packages.jsonl"));
    std::string line;
    std::size_t lines = 0;
    while (std::getline(in, line))
        if (!line.empty()) ++lines;
    CHECK(lines == 12);
}

TEST_CASE("evaluate: empty packages file exits 1") {
    TempDir tmp;
    write_file(tmp.file("packages.jsonl"), "");
    auto res = run_cli(tmp, "evaluate --packages " + tmp.file("packages.jsonl") +
                                " --out-prefix " + tmp.file("report"));
    CHECK(res.exit_code == 1);
}

TEST_CASE("evaluate: a second judge profile doubles the rows") {
    TempDir tmp;
    std::filesystem::create_directories(tmp.file("corpus"));
    write_file(tmp.file("corpus/doc.txt"), "report about collection and exfiltration over c2");
    write_file(tmp.file("manifest.json"), R"({"doc.txt": {"doc_id": "doc", "title": "Doc"}})");
    run_cli(tmp, "ingest --corpus " + tmp.file("corpus") + " --manifest " +
                     tmp.file("manifest.json"));
    run_cli(tmp, "simulate --count 3 --seed 8 --out " + tmp.file("alerts.jsonl"));
    run_cli(tmp, "respond --alerts " + tmp.file("alerts.jsonl") + " --out " +
                     tmp.file("packages.jsonl"));

    auto res = run_cli(tmp, "--set gateway.profile.second.seed=9 evaluate --packages " +
                                tmp.file("packages.jsonl") + " --profiles mock --profiles second" +
                                " --out-prefix " + tmp.file("report"));
    CHECK(res.exit_code == 0);
    std::ifstream in(tmp.file("report.jsonl"));
    std::string line;
    std::size_t rows = 0, second_rows = 0;
    std::set<std::string> normalized;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        ++rows;
        if (contains(line, "\"judge_profile\":\"second\"")) ++second_rows;
        std::size_t pos = line.find("\"judge_profile\":\"");
        if (pos != std::string::npos) {
            std::string stripped = line;
            stripped.erase(pos, line.find('"', pos + 18) - pos + 1);
            normalized.insert(stripped);
        }
    }
    CHECK(rows == 10); // 5 per profile
    CHECK(second_rows == 5);
    // a differently seeded judge must not mirror the first profile row-for-row
    CHECK(normalized.size() > 5);
}

TEST_CASE("respond: exit 3 when no alert yields a package") {
    TempDir tmp;
    std::filesystem::create_directories(tmp.file("corpus"));
    write_file(tmp.file("corpus/doc.txt"), "report about collection and exfiltration over c2");
    write_file(tmp.file("manifest.json"), R"({"doc.txt": {"doc_id": "doc", "title": "Doc"}})");
    run_cli(tmp, "ingest --corpus " + tmp.file("corpus") + " --manifest " +
                     tmp.file("manifest.json"));
    run_cli(tmp, "simulate --count 3 --seed 4 --out " + tmp.file("alerts.jsonl"));

    // a mock script whose expansion step always fails hard-fails every alert
    write_file(tmp.file("broken_mock.json"),
               R"({"rules": [{"contains": "expand the given SIEM alert", "fail": "unavailable"}]})");
    auto res = run_cli(tmp, "--set gateway.mock_script=" + tmp.file("broken_mock.json") +
                                " respond --alerts " + tmp.file("alerts.jsonl") + " --out " +
                                tmp.file("packages.jsonl"));
    CHECK(res.exit_code == 3);
    CHECK(contains(res.output, "0/3 alerts produced packages"));
    // failures are still recorded inline
    std::string packages = read_file(tmp.file("packages.jsonl"));
    CHECK(contains(packages, "\"failed\":true"));
    CHECK(contains(packages, "\"stage\":\"expansion\""));
}

TEST_CASE("evaluate: human scores add expert rows") {
    TempDir tmp;
    std::filesystem::create_directories(tmp.file("corpus"));
    write_file(tmp.file("corpus/doc.txt"), "report about collection and exfiltration over c2");
    write_file(tmp.file("manifest.json"), R"({"doc.txt": {"doc_id": "doc", "title": "Doc"}})");
    run_cli(tmp, "ingest --corpus " + tmp.file("corpus") + " --manifest " +
                     tmp.file("manifest.json"));
    run_cli(tmp, "simulate --count 3 --seed 2 --out " + tmp.file("alerts.jsonl"));
    run_cli(tmp, "respond --alerts " + tmp.file("alerts.jsonl") + " --out " +
                     tmp.file("packages.jsonl"));

    write_file(tmp.file("scores.jsonl"),
               "{\"metric\":\"answer_relevance\",\"rating\":4}\n"
               "{\"metric\":\"answer_relevance\",\"rating\":5}\n");
    auto res = run_cli(tmp, "evaluate --packages " + tmp.file("packages.jsonl") +
                                " --human-scores " + tmp.file("scores.jsonl") +
                                " --out-prefix " + tmp.file("report"));
    CHECK(res.exit_code == 0);
    std::string table = read_file(tmp.file("report.txt"));
    CHECK(contains(table, "expert Answer Relevance"));
    std::string machine = read_file(tmp.file("report.jsonl"));
    CHECK(contains(machine, "\"judge_profile\":\"expert\""));
}
