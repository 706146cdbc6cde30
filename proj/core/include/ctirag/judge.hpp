#pragma once

#include "ctirag/gateway.hpp"
#include "ctirag/pipeline.hpp"
#include "ctirag/prompt.hpp"

#include <array>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace ctirag {

enum class Metric { answer_relevance, context_relevance, groundedness };
enum class Variant { vt_plus_cti, vt_only, cti_only, not_applicable };

const char* metric_name(Metric metric);             // machine name
const char* metric_label(Metric metric);            // table label
const char* variant_name(Variant variant);          // machine name
std::string variant_label(Variant variant);         // "[VT + CTI]" etc., "" for n/a
bool metric_from_name(std::string_view name, Metric& out);
bool variant_from_name(std::string_view name, Variant& out);

struct MetricScore {
    Metric metric = Metric::answer_relevance;
    Variant variant = Variant::not_applicable; // != not_applicable iff context_relevance
    int rating = 0;                            // 1..5
    std::string rationale;                     // judge's explanation text
    std::string judge_profile;

    void validate() const;
};

// Returns the integer following the LAST occurrence of "Total Rating:"
// (case-insensitive; whitespace and light markup around the colon and the
// number are tolerated), iff it lies in [1,5]. Throws UnparseableRating on
// an absent marker, a non-integer, or an out-of-range value.
int parse_rating(const std::string& judge_output);

enum class VarianceConvention { population, sample };

struct EvaluationReport {
    Metric metric = Metric::answer_relevance;
    Variant variant = Variant::not_applicable;
    std::string judge_profile;
    std::array<double, 5> distribution{}; // percentage of ratings 1..5, sums to 100
    double mean = 0.0;
    double variance = 0.0;            // per the configured convention
    double variance_population = 0.0; // sum((r - mean)^2) / n
    double variance_sample = 0.0;     // sum((r - mean)^2) / (n - 1); 0 when n == 1
    std::size_t n = 0;
    std::size_t skipped = 0;
};

// All scores must share (metric, variant, judge_profile). Throws EmptyInput
// and MixedKeys. The population convention is the primary `variance`
// column; both conventions are always reported.
EvaluationReport aggregate(const std::vector<MetricScore>& scores,
                           VarianceConvention convention = VarianceConvention::population);

std::string report_to_json(const EvaluationReport& report);
// Aligned plain-text table mirroring the published row format; numbers are
// truncated (not rounded) to two decimals like the source tables.
std::string render_report_table(const std::vector<EvaluationReport>& reports);

// Ablation context handed to the context-relevance judge: the enrichment
// block only, the chunk block only, or both.
std::string assemble_judge_context(const IncidentPackage& package, Variant variant);

struct JudgeOptions {
    VarianceConvention convention = VarianceConvention::population;
    int max_output_tokens = 512;
    std::optional<std::uint64_t> seed;
};

struct BatchNotes {
    // one line per skipped (package, metric, variant, profile) cell
    std::vector<std::string> failures;
};

class JudgeHarness {
public:
    JudgeHarness(std::map<std::string, std::shared_ptr<ModelGateway>> profiles,
                 std::shared_ptr<TemplateSet> templates, JudgeOptions options);

    // Renders the metric's template, calls the profile's gateway at
    // temperature 0, parses the rating; one re-ask retry on an
    // unparseable rating. Throws UnparseableRating / gateway errors.
    MetricScore judge(Metric metric, Variant variant, const IncidentPackage& package,
                      const std::string& profile) const;

    // Scores every (package, metric, applicable variant, profile) cell,
    // skipping cells whose judge call ultimately fails. Rows with no
    // surviving scores are dropped (noted in `notes`).
    std::vector<EvaluationReport> evaluate_batch(const std::vector<IncidentPackage>& packages,
                                                 const std::vector<Metric>& metrics,
                                                 const std::vector<std::string>& profiles,
                                                 BatchNotes* notes = nullptr) const;

    const JudgeOptions& options() const { return options_; }

private:
    std::map<std::string, std::shared_ptr<ModelGateway>> profiles_;
    std::shared_ptr<TemplateSet> templates_;
    JudgeOptions options_;
};

// Expert scores from a plain score file (JSON-lines: {"metric": ...,
// "rating": 1..5, "variant"?: ...}); profile is forced to "expert".
// Context-relevance entries without a variant default to vt_plus_cti.
std::vector<MetricScore> read_human_scores(const std::string& path);

} // namespace ctirag
