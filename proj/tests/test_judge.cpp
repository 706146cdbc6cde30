#include "ctirag/judge.hpp"

#include "ctirag/errors.hpp"
#include "test_helpers.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace ctirag;
using ctirag::testing::asset_dir;
using ctirag::testing::TempDir;
using ctirag::testing::template_dir;

namespace {

IncidentPackage example_package() {
    IncidentPackage p;
    p.alert.id = "a-1";
    p.alert.raw_text = "src.ip=10.0.0.5 rule=egress-anomaly";
    p.alert.source = AlertSource::simulated;
    p.alert.timestamp = 1725148800;

    EnrichmentRecord rec;
    rec.ioc.kind = IocKind::ipv4;
    rec.ioc.value = "10.0.0.5";
    rec.found = true;
    rec.detection_count = 3;
    rec.engine_total = 70;
    rec.tags = {"scanner"};
    rec.summary = "seen scanning";
    p.enrichment.records = {rec};
    p.enrichment.rendered = IntelClient::render_context(p.enrichment.records);
    p.enrichment.coverage = 1.0;

    p.expanded = {"a-1", "expanded narrative", "deadbeef"};

    RetrievalResult r;
    r.chunk.chunk_id = "apt-x#0000";
    r.chunk.doc_id = "apt-x";
    r.chunk.ordinal = 0;
    r.chunk.text = "report chunk about egress anomalies";
    r.score = 0.7;
    r.rank = 1;
    p.retrieved = {r};
    p.response_plan = "1) isolate host 2) block indicator 3) collect image";
    return p;
}

MetricScore score_of(Metric metric, Variant variant, int rating,
                     const std::string& profile = "mock") {
    MetricScore s;
    s.metric = metric;
    s.variant = variant;
    s.rating = rating;
    s.judge_profile = profile;
    return s;
}

std::shared_ptr<ModelGateway> mock_gateway(std::vector<MockRule> rules) {
    MockBackendOptions options;
    options.dim = 16;
    options.rules = std::move(rules);
    return std::make_shared<ModelGateway>(std::make_unique<MockBackend>(options),
                                          GatewayOptions{});
}

JudgeHarness scripted_harness() {
    auto gateway = mock_gateway(MockBackend::load_rules(asset_dir() + "/mock_responses.json"));
    return JudgeHarness({{"mock", gateway}},
                        std::make_shared<TemplateSet>(TemplateSet::load(template_dir())),
                        JudgeOptions{});
}

} // namespace

TEST_CASE("parse_rating: happy path and last-marker-wins") {
    CHECK(parse_rating("Evaluation: good.\nTotal Rating: 5") == 5);
    CHECK(parse_rating("Total Rating: 3 ... Total Rating: 4") == 4);
    CHECK(parse_rating("TOTAL RATING: 2") == 2);
    CHECK(parse_rating("total rating:1") == 1);
    CHECK(parse_rating("Total Rating: **4**") == 4);
    CHECK(parse_rating("Total Rating:\n 3") == 3);
    CHECK(parse_rating("Total Rating: 4/5") == 4);
}

TEST_CASE("parse_rating: rejections") {
    CHECK_THROWS_AS(parse_rating("Total Rating: 7"), Error);
    CHECK_THROWS_AS(parse_rating("Total Rating: 0"), Error);
    CHECK_THROWS_AS(parse_rating("Total Rating: -2"), Error);
    CHECK_THROWS_AS(parse_rating("no marker at all"), Error);
    CHECK_THROWS_AS(parse_rating("Total Rating: excellent"), Error);
    CHECK_THROWS_AS(parse_rating("Total Rating: 3.5"), Error);
    CHECK_THROWS_AS(parse_rating("Total Rating: 3 then Total Rating: oops"), Error);
    CHECK_THROWS_AS(parse_rating(""), Error);
}

TEST_CASE("aggregate reproduces the published answer-relevance row") {
    std::vector<MetricScore> scores;
    scores.push_back(score_of(Metric::answer_relevance, Variant::not_applicable, 4));
    for (int i = 0; i < 46; ++i)
        scores.push_back(score_of(Metric::answer_relevance, Variant::not_applicable, 5));

    EvaluationReport r = aggregate(scores);
    CHECK(r.n == 47);
    CHECK(r.mean == doctest::Approx(234.0 / 47.0).epsilon(1e-12));
    CHECK(std::floor(r.mean * 100.0) / 100.0 == doctest::Approx(4.97));
    CHECK(std::floor(r.variance_population * 100.0) / 100.0 == doctest::Approx(0.02));
    CHECK(r.distribution[3] == doctest::Approx(100.0 / 47.0));
    CHECK(r.distribution[4] == doctest::Approx(4600.0 / 47.0));
}

TEST_CASE("aggregate reproduces the expert row under both conventions") {
    std::vector<MetricScore> scores;
    for (int i = 0; i < 8; ++i)
        scores.push_back(score_of(Metric::answer_relevance, Variant::not_applicable, 4, "expert"));
    for (int i = 0; i < 2; ++i)
        scores.push_back(score_of(Metric::answer_relevance, Variant::not_applicable, 5, "expert"));

    EvaluationReport r = aggregate(scores);
    CHECK(r.mean == doctest::Approx(4.20).epsilon(1e-12));
    CHECK(r.variance_population == doctest::Approx(0.16).epsilon(1e-12));
    CHECK(r.variance_sample == doctest::Approx(1.6 / 9.0).epsilon(1e-12));
    CHECK(r.variance == r.variance_population); // default convention
    EvaluationReport rs = aggregate(scores, VarianceConvention::sample);
    CHECK(rs.variance == rs.variance_sample);
}

TEST_CASE("aggregate: single score, empty input, mixed keys") {
    EvaluationReport r =
        aggregate({score_of(Metric::groundedness, Variant::not_applicable, 5)});
    CHECK(r.mean == 5.0);
    CHECK(r.variance == 0.0);
    CHECK(r.variance_sample == 0.0);
    CHECK(r.distribution[4] == 100.0);

    CHECK_THROWS_AS(aggregate({}), Error);
    CHECK_THROWS_AS(aggregate({score_of(Metric::groundedness, Variant::not_applicable, 5),
                               score_of(Metric::answer_relevance, Variant::not_applicable, 5)}),
                    Error);
    CHECK_THROWS_AS(aggregate({score_of(Metric::context_relevance, Variant::vt_only, 5),
                               score_of(Metric::context_relevance, Variant::cti_only, 5)}),
                    Error);
}

TEST_CASE("aggregate is permutation-invariant") {
    std::vector<MetricScore> scores;
    std::mt19937 rng(17);
    for (int i = 0; i < 40; ++i)
        scores.push_back(
            score_of(Metric::groundedness, Variant::not_applicable, 1 + rng() % 5));
    EvaluationReport base = aggregate(scores);
    for (int trial = 0; trial < 10; ++trial) {
        std::shuffle(scores.begin(), scores.end(), rng);
        EvaluationReport r = aggregate(scores);
        CHECK(r.mean == base.mean);
        // summation order shifts the last ulp; equality up to 1e-12 is the contract
        CHECK(r.variance_population == doctest::Approx(base.variance_population).epsilon(1e-12));
        CHECK(r.distribution == base.distribution);
    }
}

TEST_CASE("counts reconstructed from a report re-aggregate to the same moments") {
    std::mt19937 rng(23);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<MetricScore> scores;
        std::size_t n = 1 + rng() % 120;
        for (std::size_t i = 0; i < n; ++i)
            scores.push_back(
                score_of(Metric::answer_relevance, Variant::not_applicable, 1 + rng() % 5));
        EvaluationReport r = aggregate(scores);

        double total = 0.0;
        std::vector<MetricScore> rebuilt;
        for (int rating = 1; rating <= 5; ++rating) {
            auto count = static_cast<std::size_t>(
                std::llround(r.distribution[rating - 1] * static_cast<double>(r.n) / 100.0));
            for (std::size_t k = 0; k < count; ++k)
                rebuilt.push_back(score_of(Metric::answer_relevance, Variant::not_applicable, rating));
            total += r.distribution[rating - 1];
        }
        CHECK(std::abs(total - 100.0) < 0.01);
        EvaluationReport again = aggregate(rebuilt);
        CHECK(again.n == r.n);
        CHECK(again.mean == doctest::Approx(r.mean).epsilon(1e-12));
        CHECK(again.variance_population == doctest::Approx(r.variance_population).epsilon(1e-12));
        CHECK(r.mean >= 1.0);
        CHECK(r.mean <= 5.0);
        CHECK(r.variance_population <= 4.0); // ((5-1)/2)^2
    }
}

TEST_CASE("judge binds the right template per metric and parses the rating") {
    JudgeHarness harness = scripted_harness();
    IncidentPackage package = example_package();

    MetricScore ar = harness.judge(Metric::answer_relevance, Variant::not_applicable, package, "mock");
    CHECK(ar.rating >= 4); // scripted {rating_high}
    CHECK(!ar.rationale.empty());

    MetricScore gnd = harness.judge(Metric::groundedness, Variant::not_applicable, package, "mock");
    CHECK(gnd.rating >= 4);

    MetricScore cr = harness.judge(Metric::context_relevance, Variant::vt_only, package, "mock");
    CHECK(cr.rating >= 1);
    CHECK(cr.rating <= 5);
}

TEST_CASE("variant applies exactly to context relevance") {
    JudgeHarness harness = scripted_harness();
    IncidentPackage package = example_package();
    CHECK_THROWS_AS(
        harness.judge(Metric::answer_relevance, Variant::vt_only, package, "mock"), Error);
    CHECK_THROWS_AS(
        harness.judge(Metric::context_relevance, Variant::not_applicable, package, "mock"), Error);
    CHECK_THROWS_AS(
        harness.judge(Metric::answer_relevance, Variant::not_applicable, package, "nope"), Error);
}

TEST_CASE("ablation assembly separates the two context sources") {
    IncidentPackage package = example_package();

    std::string vt_only = assemble_judge_context(package, Variant::vt_only);
    CHECK(vt_only == package.enrichment.rendered);
    CHECK(vt_only.find("[[doc:") == std::string::npos);

    std::string cti_only = assemble_judge_context(package, Variant::cti_only);
    CHECK(cti_only.find(kEnrichmentHeader) == std::string::npos);
    CHECK(contains(cti_only, "[[doc:apt-x chunk:0"));

    std::string both = assemble_judge_context(package, Variant::vt_plus_cti);
    CHECK(contains(both, kEnrichmentHeader));
    CHECK(contains(both, "[[doc:apt-x chunk:0"));

    CHECK_THROWS_AS(assemble_judge_context(package, Variant::not_applicable), Error);
}

TEST_CASE("unparseable first reply triggers exactly one re-ask") {
    // first reply carries no rating; the re-ask suffix routes to a second rule
    std::vector<MockRule> rules;
    rules.push_back({MockRule::Match::contains, "Reply with only", "Total Rating: 4", ""});
    rules.push_back({MockRule::Match::contains, "You will evaluate how well", "no rating here", ""});
    auto gateway = mock_gateway(rules);
    JudgeHarness harness({{"mock", gateway}},
                         std::make_shared<TemplateSet>(TemplateSet::load(template_dir())),
                         JudgeOptions{});
    MetricScore s =
        harness.judge(Metric::answer_relevance, Variant::not_applicable, example_package(), "mock");
    CHECK(s.rating == 4);
}

TEST_CASE("judge gives up after the re-ask fails too") {
    std::vector<MockRule> rules;
    rules.push_back({MockRule::Match::contains, "", "still no rating", ""});
    auto gateway = mock_gateway(rules);
    JudgeHarness harness({{"mock", gateway}},
                         std::make_shared<TemplateSet>(TemplateSet::load(template_dir())),
                         JudgeOptions{});
    CHECK_THROWS_AS(
        harness.judge(Metric::answer_relevance, Variant::not_applicable, example_package(), "mock"),
        Error);
}

TEST_CASE("evaluate_batch: row arithmetic and skip accounting") {
    JudgeHarness harness = scripted_harness();
    std::vector<IncidentPackage> packages;
    for (int i = 0; i < 10; ++i) {
        IncidentPackage p = example_package();
        p.alert.id = "a-" + std::to_string(i);
        p.alert.raw_text += " case " + std::to_string(i);
        packages.push_back(std::move(p));
    }

    std::vector<Metric> metrics = {Metric::answer_relevance, Metric::context_relevance,
                                   Metric::groundedness};
    auto reports = harness.evaluate_batch(packages, metrics, {"mock"});
    CHECK(reports.size() == 5); // 1 + 3 variants + 1
    for (const EvaluationReport& r : reports) {
        CHECK(r.n == 10);
        CHECK(r.skipped == 0);
        double sum = 0.0;
        for (double d : r.distribution) sum += d;
        CHECK(std::abs(sum - 100.0) < 0.01);
    }

    // two profiles double the rows
    auto gateway = mock_gateway(MockBackend::load_rules(asset_dir() + "/mock_responses.json"));
    JudgeHarness two({{"mock", gateway}, {"mock2", gateway}},
                     std::make_shared<TemplateSet>(TemplateSet::load(template_dir())),
                     JudgeOptions{});
    CHECK(two.evaluate_batch(packages, metrics, {"mock", "mock2"}).size() == 10);

    // a package whose answer-relevance reply is unparseable twice is
    // excluded from that row's n and noted
    std::vector<MockRule> rules = MockBackend::load_rules(asset_dir() + "/mock_responses.json");
    rules.insert(rules.begin(),
                 {MockRule::Match::contains, "POISON-PILL", "no rating in this reply", ""});
    JudgeHarness skipping({{"mock", mock_gateway(rules)}},
                          std::make_shared<TemplateSet>(TemplateSet::load(template_dir())),
                          JudgeOptions{});
    packages[3].response_plan += " POISON-PILL";
    BatchNotes notes;
    auto skipped_reports =
        skipping.evaluate_batch(packages, {Metric::answer_relevance}, {"mock"}, &notes);
    REQUIRE(skipped_reports.size() == 1);
    CHECK(skipped_reports[0].n == 9);
    CHECK(skipped_reports[0].skipped == 1);
    REQUIRE(notes.failures.size() == 1);
    CHECK(contains(notes.failures[0], "a-3"));
}

TEST_CASE("report table renders paper-style truncated numbers") {
    std::vector<MetricScore> scores;
    scores.push_back(score_of(Metric::answer_relevance, Variant::not_applicable, 4));
    for (int i = 0; i < 46; ++i)
        scores.push_back(score_of(Metric::answer_relevance, Variant::not_applicable, 5));
    EvaluationReport r = aggregate(scores);
    std::string table = render_report_table({r});
    CHECK(contains(table, "Model & Metric"));
    CHECK(contains(table, "4.97")); // truncated, not 4.98
    CHECK(contains(table, "0.02"));
    CHECK(contains(table, "2.12")); // truncated, matching the source table
}

TEST_CASE("report json carries the full-precision values") {
    EvaluationReport r = aggregate({score_of(Metric::context_relevance, Variant::cti_only, 3),
                                    score_of(Metric::context_relevance, Variant::cti_only, 4)});
    std::string json = report_to_json(r);
    CHECK(contains(json, "\"metric\":\"context_relevance\""));
    CHECK(contains(json, "\"variant\":\"cti_only\""));
    CHECK(contains(json, "\"mean\":3.5"));
}

TEST_CASE("human score files load under the expert profile") {
    TempDir tmp;
    std::string path = tmp.file("scores.jsonl");
    write_file(path,
               "{\"metric\":\"answer_relevance\",\"rating\":4}\n"
               "{\"metric\":\"context_relevance\",\"rating\":5}\n"
               "{\"metric\":\"context_relevance\",\"variant\":\"vt_only\",\"rating\":2}\n"
               "{\"metric\":\"groundedness\",\"rating\":3}\n");
    auto scores = read_human_scores(path);
    REQUIRE(scores.size() == 4);
    for (const MetricScore& s : scores) CHECK(s.judge_profile == "expert");
    CHECK(scores[1].variant == Variant::vt_plus_cti); // default for CR
    CHECK(scores[2].variant == Variant::vt_only);

    write_file(path, "{\"metric\":\"answer_relevance\",\"rating\":9}\n");
    CHECK_THROWS_AS(read_human_scores(path), Error);
}
