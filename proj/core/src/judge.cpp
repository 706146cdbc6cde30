#include "ctirag/judge.hpp"

#include "ctirag/errors.hpp"
#include "ctirag/log.hpp"
#include "ctirag/util.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace ctirag {

using nlohmann::json;

const char* metric_name(Metric metric) {
    switch (metric) {
    case Metric::answer_relevance: return "answer_relevance";
    case Metric::context_relevance: return "context_relevance";
    case Metric::groundedness: return "groundedness";
    }
    return "answer_relevance";
}

const char* metric_label(Metric metric) {
    switch (metric) {
    case Metric::answer_relevance: return "Answer Relevance";
    case Metric::context_relevance: return "Context Relevance";
    case Metric::groundedness: return "Groundedness";
    }
    return "Answer Relevance";
}

const char* variant_name(Variant variant) {
    switch (variant) {
    case Variant::vt_plus_cti: return "vt_plus_cti";
    case Variant::vt_only: return "vt_only";
    case Variant::cti_only: return "cti_only";
    case Variant::not_applicable: return "not_applicable";
    }
    return "not_applicable";
}

std::string variant_label(Variant variant) {
    switch (variant) {
    case Variant::vt_plus_cti: return "[VT + CTI]";
    case Variant::vt_only: return "[VT only]";
    case Variant::cti_only: return "[CTI only]";
    case Variant::not_applicable: return "";
    }
    return "";
}

bool metric_from_name(std::string_view name, Metric& out) {
    if (name == "answer_relevance") out = Metric::answer_relevance;
    else if (name == "context_relevance") out = Metric::context_relevance;
    else if (name == "groundedness") out = Metric::groundedness;
    else return false;
    return true;
}

bool variant_from_name(std::string_view name, Variant& out) {
    if (name == "vt_plus_cti") out = Variant::vt_plus_cti;
    else if (name == "vt_only") out = Variant::vt_only;
    else if (name == "cti_only") out = Variant::cti_only;
    else if (name == "not_applicable") out = Variant::not_applicable;
    else return false;
    return true;
}

void MetricScore::validate() const {
    if (rating < 1 || rating > 5)
        raise(ErrorCode::invalid_params, "rating must be in [1,5], got " + std::to_string(rating));
    bool needs_variant = metric == Metric::context_relevance;
    if (needs_variant == (variant == Variant::not_applicable))
        raise(ErrorCode::invalid_params,
              "variant must be set exactly for context_relevance scores");
}

int parse_rating(const std::string& judge_output) {
    const std::string lower = to_lower(judge_output);
    const std::string marker = "total rating";
    std::size_t pos = lower.rfind(marker);
    if (pos == std::string::npos)
        raise(ErrorCode::unparseable_rating, "no 'Total Rating' marker in judge output");

    std::size_t i = pos + marker.size();
    auto is_markup = [](char c) {
        return c == ':' || c == '*' || c == '_' || c == '`' || c == '#' || c == '[' ||
               c == '(' || c == '"' || c == '\'' || c == '=' || c == '-' ||
               std::isspace(static_cast<unsigned char>(c));
    };
    // a '-' directly before the digits is a sign; elsewhere it is markup
    bool negative = false;
    while (i < lower.size() && is_markup(lower[i])) {
        negative = lower[i] == '-';
        ++i;
    }
    if (negative && i < lower.size() && lower[i] >= '0' && lower[i] <= '9')
        raise(ErrorCode::unparseable_rating, "negative rating");

    std::size_t digits_begin = i;
    while (i < lower.size() && lower[i] >= '0' && lower[i] <= '9') ++i;
    if (i == digits_begin)
        raise(ErrorCode::unparseable_rating, "no integer after the last 'Total Rating' marker");
    if (i - digits_begin > 9)
        raise(ErrorCode::unparseable_rating, "rating out of range");
    if (i < lower.size() && lower[i] == '.' && i + 1 < lower.size() &&
        lower[i + 1] >= '0' && lower[i + 1] <= '9')
        raise(ErrorCode::unparseable_rating, "rating is not an integer");

    int value = std::stoi(lower.substr(digits_begin, i - digits_begin));
    if (value < 1 || value > 5)
        raise(ErrorCode::unparseable_rating,
              "rating " + std::to_string(value) + " outside [1,5]");
    return value;
}

EvaluationReport aggregate(const std::vector<MetricScore>& scores,
                           VarianceConvention convention) {
    if (scores.empty()) raise(ErrorCode::empty_input, "aggregate needs at least one score");
    const MetricScore& first = scores.front();
    for (const MetricScore& s : scores) {
        s.validate();
        if (s.metric != first.metric || s.variant != first.variant ||
            s.judge_profile != first.judge_profile)
            raise(ErrorCode::mixed_keys,
                  "aggregate requires one (metric, variant, judge_profile) key");
    }

    EvaluationReport report;
    report.metric = first.metric;
    report.variant = first.variant;
    report.judge_profile = first.judge_profile;
    report.n = scores.size();

    std::array<std::size_t, 5> counts{};
    double sum = 0.0;
    for (const MetricScore& s : scores) {
        counts[static_cast<std::size_t>(s.rating - 1)]++;
        sum += s.rating;
    }
    const double n = static_cast<double>(report.n);
    report.mean = sum / n;
    double sq = 0.0;
    for (const MetricScore& s : scores) {
        double d = s.rating - report.mean;
        sq += d * d;
    }
    report.variance_population = sq / n;
    report.variance_sample = report.n > 1 ? sq / (n - 1.0) : 0.0;
    report.variance = convention == VarianceConvention::population ? report.variance_population
                                                                   : report.variance_sample;
    for (std::size_t i = 0; i < 5; ++i)
        report.distribution[i] = 100.0 * static_cast<double>(counts[i]) / n;
    return report;
}

std::string report_to_json(const EvaluationReport& r) {
    json j;
    j["schema_version"] = 1;
    j["metric"] = metric_name(r.metric);
    j["variant"] = variant_name(r.variant);
    j["judge_profile"] = r.judge_profile;
    json dist;
    for (int i = 0; i < 5; ++i) dist[std::to_string(i + 1)] = r.distribution[i];
    j["distribution"] = dist;
    j["mean"] = r.mean;
    j["variance"] = r.variance;
    j["variance_population"] = r.variance_population;
    j["variance_sample"] = r.variance_sample;
    j["n"] = r.n;
    j["skipped"] = r.skipped;
    return j.dump();
}

namespace {

// the published tables truncate to two decimals rather than round
double trunc2(double x) { return std::floor(x * 100.0 + 1e-9) / 100.0; }

std::string row_label(const EvaluationReport& r) {
    std::string label = r.judge_profile + " " + metric_label(r.metric);
    std::string vl = variant_label(r.variant);
    if (!vl.empty()) label += " " + vl;
    return label;
}

} // namespace

std::string render_report_table(const std::vector<EvaluationReport>& reports) {
    std::size_t label_width = std::string("Model & Metric").size();
    for (const EvaluationReport& r : reports) label_width = std::max(label_width, row_label(r).size());

    std::ostringstream out;
    char line[256];
    std::snprintf(line, sizeof(line), "%-*s  %7s %7s %7s %7s %7s %7s %9s %5s %8s\n",
                  static_cast<int>(label_width), "Model & Metric", "1 (%)", "2 (%)", "3 (%)",
                  "4 (%)", "5 (%)", "Mean", "Variance", "n", "skipped");
    out << line;
    for (const EvaluationReport& r : reports) {
        std::snprintf(line, sizeof(line),
                      "%-*s  %7.2f %7.2f %7.2f %7.2f %7.2f %7.2f %9.2f %5zu %8zu\n",
                      static_cast<int>(label_width), row_label(r).c_str(),
                      trunc2(r.distribution[0]), trunc2(r.distribution[1]),
                      trunc2(r.distribution[2]), trunc2(r.distribution[3]),
                      trunc2(r.distribution[4]), trunc2(r.mean), trunc2(r.variance), r.n,
                      r.skipped);
        out << line;
    }
    return out.str();
}

std::string assemble_judge_context(const IncidentPackage& package, Variant variant) {
    switch (variant) {
    case Variant::vt_only: return package.enrichment.rendered;
    case Variant::cti_only: return render_chunk_context(package.retrieved);
    case Variant::vt_plus_cti:
        return package.enrichment.rendered + "\n\n" + render_chunk_context(package.retrieved);
    case Variant::not_applicable: break;
    }
    raise(ErrorCode::invalid_params, "no judge context for variant not_applicable");
    return {}; // unreachable
}

JudgeHarness::JudgeHarness(std::map<std::string, std::shared_ptr<ModelGateway>> profiles,
                           std::shared_ptr<TemplateSet> templates, JudgeOptions options)
    : profiles_(std::move(profiles)), templates_(std::move(templates)), options_(options) {
    if (profiles_.empty()) raise(ErrorCode::invalid_params, "judge needs at least one profile");
    if (!templates_) raise(ErrorCode::invalid_params, "judge needs the template set");
}

MetricScore JudgeHarness::judge(Metric metric, Variant variant, const IncidentPackage& package,
                                const std::string& profile) const {
    bool needs_variant = metric == Metric::context_relevance;
    if (needs_variant == (variant == Variant::not_applicable))
        raise(ErrorCode::invalid_params, "variant applies exactly to context_relevance");
    auto it = profiles_.find(profile);
    if (it == profiles_.end())
        raise(ErrorCode::invalid_params, "judge profile not configured: " + profile);
    ModelGateway& gateway = *it->second;

    std::string prompt;
    switch (metric) {
    case Metric::answer_relevance:
        prompt = render(templates_->get(TemplateName::judge_answer_relevance),
                        {{"alert", package.alert.raw_text}, {"response", package.response_plan}});
        break;
    case Metric::context_relevance:
        prompt = render(templates_->get(TemplateName::judge_context_relevance),
                        {{"alert", package.alert.raw_text},
                         {"context", assemble_judge_context(package, variant)}});
        break;
    case Metric::groundedness:
        prompt = render(templates_->get(TemplateName::judge_groundedness),
                        {{"response", package.response_plan},
                         {"context", assemble_judge_context(package, Variant::vt_plus_cti)}});
        break;
    }

    GenerationRequest request;
    request.prompt = prompt;
    request.max_output_tokens = options_.max_output_tokens;
    request.temperature = 0.0;
    request.seed = options_.seed;

    std::string output = gateway.complete(request);
    int rating = 0;
    try {
        rating = parse_rating(output);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::unparseable_rating) throw;
        // one terse re-ask before giving up
        GenerationRequest retry = request;
        retry.prompt = prompt + "\n\nReply with only: Total Rating: N";
        output = gateway.complete(retry);
        rating = parse_rating(output);
    }

    MetricScore score;
    score.metric = metric;
    score.variant = variant;
    score.rating = rating;
    score.rationale = output;
    score.judge_profile = profile;
    score.validate();
    return score;
}

std::vector<EvaluationReport> JudgeHarness::evaluate_batch(
    const std::vector<IncidentPackage>& packages, const std::vector<Metric>& metrics,
    const std::vector<std::string>& profiles, BatchNotes* notes) const {
    if (packages.empty() || metrics.empty() || profiles.empty())
        raise(ErrorCode::empty_input, "evaluate_batch needs packages, metrics and profiles");

    std::vector<EvaluationReport> reports;
    for (const std::string& profile : profiles) {
        for (Metric metric : metrics) {
            std::vector<Variant> variants;
            if (metric == Metric::context_relevance)
                variants = {Variant::vt_plus_cti, Variant::vt_only, Variant::cti_only};
            else
                variants = {Variant::not_applicable};

            for (Variant variant : variants) {
                std::vector<MetricScore> scores;
                std::size_t skipped = 0;
                for (const IncidentPackage& package : packages) {
                    try {
                        scores.push_back(judge(metric, variant, package, profile));
                    } catch (const Error& e) {
                        ++skipped;
                        std::string note = "alert=" + package.alert.id +
                                           " metric=" + metric_name(metric) +
                                           " variant=" + variant_name(variant) +
                                           " profile=" + profile + ": " + e.what();
                        if (notes) notes->failures.push_back(note);
                        log_warn("judge cell skipped: " + note);
                    }
                }
                if (scores.empty()) continue; // row fully failed; recorded above
                EvaluationReport report = aggregate(scores, options_.convention);
                report.skipped = skipped;
                reports.push_back(std::move(report));
            }
        }
    }
    return reports;
}

std::vector<MetricScore> read_human_scores(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(ErrorCode::store_io, "cannot open score file: " + path);

    std::vector<MetricScore> scores;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object())
            raise(ErrorCode::invalid_params,
                  path + ":" + std::to_string(lineno) + ": not a JSON object");
        MetricScore score;
        Metric metric;
        if (!j.contains("metric") || !metric_from_name(j["metric"].get<std::string>(), metric))
            raise(ErrorCode::invalid_params,
                  path + ":" + std::to_string(lineno) + ": unknown metric");
        score.metric = metric;
        if (!j.contains("rating") || !j["rating"].is_number_integer())
            raise(ErrorCode::invalid_params,
                  path + ":" + std::to_string(lineno) + ": integer rating required");
        score.rating = j["rating"].get<int>();
        if (metric == Metric::context_relevance) {
            score.variant = Variant::vt_plus_cti;
            if (j.contains("variant")) {
                Variant v;
                if (!variant_from_name(j["variant"].get<std::string>(), v) ||
                    v == Variant::not_applicable)
                    raise(ErrorCode::invalid_params,
                          path + ":" + std::to_string(lineno) + ": bad variant");
                score.variant = v;
            }
        }
        score.judge_profile = "expert";
        if (j.contains("rationale")) score.rationale = j["rationale"].get<std::string>();
        score.validate();
        scores.push_back(std::move(score));
    }
    return scores;
}

} // namespace ctirag
