#include "ctirag/pipeline.hpp"

#include "ctirag/log.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <sstream>

namespace ctirag {

using nlohmann::json;

namespace {

json trace_to_json(const std::vector<TraceEvent>& trace) {
    json arr = json::array();
    for (const TraceEvent& e : trace) {
        json j;
        j["seq"] = e.seq;
        j["stage"] = e.stage;
        j["kind"] = e.kind;
        j["name"] = e.name;
        j["input_digest"] = e.input_digest;
        j["output_digest"] = e.output_digest;
        j["duration_ms"] = e.duration_ms;
        j["detail"] = e.detail;
        arr.push_back(std::move(j));
    }
    return arr;
}

std::vector<TraceEvent> trace_from_json(const json& arr) {
    std::vector<TraceEvent> trace;
    for (const json& j : arr) {
        TraceEvent e;
        e.seq = j.value("seq", 0);
        e.stage = j.value("stage", "");
        e.kind = j.value("kind", "");
        e.name = j.value("name", "");
        e.input_digest = j.value("input_digest", "");
        e.output_digest = j.value("output_digest", "");
        e.duration_ms = j.value("duration_ms", static_cast<std::int64_t>(0));
        if (j.contains("detail"))
            for (auto& [k, v] : j["detail"].items()) e.detail[k] = v.get<std::string>();
        trace.push_back(std::move(e));
    }
    return trace;
}

json record_to_json(const EnrichmentRecord& r) {
    json j;
    j["ioc"] = {{"kind", ioc_kind_name(r.ioc.kind)},
                {"value", r.ioc.value},
                {"span", json::array({r.ioc.span.begin, r.ioc.span.end})}};
    j["found"] = r.found;
    j["detection_count"] = r.detection_count;
    j["engine_total"] = r.engine_total;
    j["tags"] = r.tags;
    j["reputation"] = r.reputation;
    j["summary"] = r.summary;
    j["fetched_at"] = format_utc(r.fetched_at);
    j["annotations"] = r.annotations;
    return j;
}

EnrichmentRecord record_from_json(const json& j) {
    EnrichmentRecord r;
    IocKind kind;
    if (!ioc_kind_from_name(j.at("ioc").at("kind").get<std::string>(), kind))
        raise(ErrorCode::invalid_params, "unknown ioc kind in package");
    r.ioc.kind = kind;
    r.ioc.value = j.at("ioc").at("value").get<std::string>();
    r.ioc.span = {j.at("ioc").at("span")[0].get<std::size_t>(),
                  j.at("ioc").at("span")[1].get<std::size_t>()};
    r.found = j.value("found", false);
    r.detection_count = j.value("detection_count", static_cast<std::int64_t>(0));
    r.engine_total = j.value("engine_total", static_cast<std::int64_t>(1));
    if (j.contains("tags")) r.tags = j["tags"].get<std::vector<std::string>>();
    r.reputation = j.value("reputation", static_cast<std::int64_t>(0));
    r.summary = j.value("summary", "");
    if (j.contains("fetched_at")) parse_utc(j["fetched_at"].get<std::string>(), r.fetched_at);
    if (j.contains("annotations"))
        r.annotations = j["annotations"].get<std::vector<std::string>>();
    return r;
}

json alert_to_json_obj(const Alert& a) {
    json j;
    j["id"] = a.id;
    j["raw_text"] = a.raw_text;
    j["source"] = alert_source_name(a.source);
    j["timestamp"] = format_utc(a.timestamp);
    if (!a.labels.empty()) j["labels"] = a.labels;
    return j;
}

Alert alert_from_json_obj(const json& j) { return alert_from_json(j.dump()); }

} // namespace

std::string package_to_json(const IncidentPackage& p) {
    json j;
    j["schema_version"] = kPackageSchemaVersion;
    j["alert"] = alert_to_json_obj(p.alert);

    json enr;
    enr["coverage"] = p.enrichment.coverage;
    enr["rendered"] = p.enrichment.rendered;
    json records = json::array();
    for (const EnrichmentRecord& r : p.enrichment.records) records.push_back(record_to_json(r));
    enr["records"] = records;
    j["enrichment"] = enr;

    j["expanded"] = {{"alert_id", p.expanded.alert_id},
                     {"text", p.expanded.text},
                     {"derived_from", p.expanded.derived_from}};

    json retrieved = json::array();
    for (const RetrievalResult& r : p.retrieved) {
        json c;
        c["chunk"] = {{"chunk_id", r.chunk.chunk_id},
                      {"doc_id", r.chunk.doc_id},
                      {"ordinal", r.chunk.ordinal},
                      {"text", r.chunk.text},
                      {"char_range", json::array({r.chunk.char_range.begin, r.chunk.char_range.end})}};
        c["score"] = r.score;
        c["rank"] = r.rank;
        retrieved.push_back(std::move(c));
    }
    j["retrieved"] = retrieved;
    j["response_plan"] = p.response_plan;
    j["trace"] = trace_to_json(p.trace);
    return j.dump();
}

IncidentPackage package_from_json(const std::string& json_text) {
    json j = json::parse(json_text, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        raise(ErrorCode::invalid_params, "package record is not a JSON object");
    if (j.value("schema_version", 0) != kPackageSchemaVersion)
        raise(ErrorCode::version_mismatch, "package schema_version unsupported");
    if (j.value("failed", false))
        raise(ErrorCode::invalid_params, "record is a failed-alert marker, not a package");

    IncidentPackage p;
    try {
        p.alert = alert_from_json_obj(j.at("alert"));
        const json& enr = j.at("enrichment");
        p.enrichment.coverage = enr.value("coverage", 0.0);
        p.enrichment.rendered = enr.value("rendered", "");
        if (enr.contains("records"))
            for (const json& r : enr["records"]) p.enrichment.records.push_back(record_from_json(r));
        p.expanded.alert_id = j.at("expanded").value("alert_id", "");
        p.expanded.text = j.at("expanded").value("text", "");
        p.expanded.derived_from = j.at("expanded").value("derived_from", "");
        if (j.contains("retrieved"))
            for (const json& c : j["retrieved"]) {
                RetrievalResult r;
                r.chunk.chunk_id = c.at("chunk").at("chunk_id").get<std::string>();
                r.chunk.doc_id = c.at("chunk").at("doc_id").get<std::string>();
                r.chunk.ordinal = c.at("chunk").at("ordinal").get<std::size_t>();
                r.chunk.text = c.at("chunk").at("text").get<std::string>();
                r.chunk.char_range = {c.at("chunk").at("char_range")[0].get<std::size_t>(),
                                      c.at("chunk").at("char_range")[1].get<std::size_t>()};
                r.score = c.value("score", 0.0);
                r.rank = c.value("rank", 0);
                p.retrieved.push_back(std::move(r));
            }
        p.response_plan = j.value("response_plan", "");
        if (j.contains("trace")) p.trace = trace_from_json(j["trace"]);
    } catch (const json::exception& e) {
        raise(ErrorCode::invalid_params, std::string("package record: ") + e.what());
    }
    return p;
}

std::string failed_package_to_json(const Alert& alert, const std::string& stage,
                                   const std::string& message,
                                   const std::vector<TraceEvent>& trace) {
    json j;
    j["schema_version"] = kPackageSchemaVersion;
    j["failed"] = true;
    j["alert"] = alert_to_json_obj(alert);
    j["error"] = {{"stage", stage}, {"message", message}};
    j["trace"] = trace_to_json(trace);
    return j.dump();
}

std::string render_chunk_context(const std::vector<RetrievalResult>& retrieved) {
    if (retrieved.empty()) return kNoCtiContext;
    std::ostringstream out;
    for (std::size_t i = 0; i < retrieved.size(); ++i) {
        const RetrievalResult& r = retrieved[i];
        char score[32];
        std::snprintf(score, sizeof(score), "%.4f", r.score);
        if (i) out << "\n\n";
        out << "[[doc:" << r.chunk.doc_id << " chunk:" << r.chunk.ordinal << " score:" << score
            << "]]\n"
            << r.chunk.text;
    }
    return out.str();
}

PipelineError::PipelineError(std::string stage, std::string message, IncidentPackage partial)
    : Error(ErrorCode::pipeline_error, "stage '" + stage + "': " + message),
      stage_(std::move(stage)), partial_(std::move(partial)) {}

ResponsePipeline::ResponsePipeline(std::shared_ptr<IntelClient> intel,
                                   std::shared_ptr<KnowledgeBase> kb,
                                   std::shared_ptr<ModelGateway> gateway,
                                   std::shared_ptr<TemplateSet> templates, PipelineOptions options,
                                   ClockPtr clock)
    : intel_(std::move(intel)), kb_(std::move(kb)), gateway_(std::move(gateway)),
      templates_(std::move(templates)), options_(options), clock_(std::move(clock)) {
    if (!intel_ || !kb_ || !gateway_ || !templates_)
        raise(ErrorCode::invalid_params, "pipeline requires intel, kb, gateway and templates");
    if (options_.retrieval_k < 1) raise(ErrorCode::invalid_params, "pipeline k must be >= 1");
    if (!clock_) clock_ = system_clock();
}

TraceEvent& ResponsePipeline::push_event(std::vector<TraceEvent>* trace, const std::string& stage,
                                         const std::string& kind, const std::string& name) {
    TraceEvent e;
    e.seq = static_cast<int>(trace->size());
    e.stage = stage;
    e.kind = kind;
    e.name = name;
    trace->push_back(std::move(e));
    return trace->back();
}

ExpandedAlert ResponsePipeline::expand_alert(const Alert& alert,
                                             const EnrichmentContext& enrichment,
                                             std::vector<TraceEvent>* trace) {
    const PromptTemplate& tmpl = templates_->get(TemplateName::expansion);
    std::string prompt = render(
        tmpl, {{"alert", alert.raw_text}, {"virustotal_context", enrichment.rendered}});

    GenerationRequest request;
    request.prompt = prompt;
    request.max_output_tokens = options_.max_output_tokens;
    request.seed = options_.seed;

    std::int64_t start = clock_->now_unix_millis();
    std::string text = gateway_->complete(request);
    if (trace) {
        TraceEvent& e = push_event(trace, "expansion", "complete", "expansion_prompt");
        e.input_digest = fnv1a64_hex(prompt);
        e.output_digest = fnv1a64_hex(text);
        e.duration_ms = clock_->now_unix_millis() - start;
    }

    ExpandedAlert expanded;
    expanded.alert_id = alert.id;
    expanded.text = std::move(text);
    expanded.derived_from = fnv1a64_hex(alert.raw_text + "\x1f" + enrichment.rendered);
    return expanded;
}

std::vector<RetrievalResult> ResponsePipeline::retrieve_context(const ExpandedAlert& expanded,
                                                                std::size_t k,
                                                                std::vector<TraceEvent>* trace) {
    if (k < 1) raise(ErrorCode::invalid_params, "k must be >= 1");
    if (expanded.text.empty()) raise(ErrorCode::invalid_params, "expanded alert text is empty");

    std::int64_t start = clock_->now_unix_millis();
    std::vector<RetrievalResult> results;
    try {
        results = kb_->search(expanded.text, k);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::empty_store) throw;
        log_warn("knowledge base is empty; continuing without CTI context");
        return {};
    }
    if (trace) {
        TraceEvent& e = push_event(trace, "retrieval", "embed", "query_embedding");
        e.input_digest = fnv1a64_hex(expanded.text);
        e.duration_ms = clock_->now_unix_millis() - start;
        e.detail["results"] = std::to_string(results.size());
    }
    return results;
}

std::string ResponsePipeline::generate_response(const Alert& alert,
                                                const EnrichmentContext& enrichment,
                                                const std::vector<RetrievalResult>& retrieved,
                                                std::vector<TraceEvent>* trace) {
    const PromptTemplate& tmpl = templates_->get(TemplateName::incident_response);
    auto assemble = [&](std::size_t keep) {
        std::vector<RetrievalResult> kept(retrieved.begin(),
                                          retrieved.begin() + static_cast<std::ptrdiff_t>(keep));
        return render(tmpl, {{"question", alert.raw_text},
                             {"virustotal_context", enrichment.rendered},
                             {"context", render_chunk_context(kept)}});
    };

    // drop lowest-ranked chunks until the prompt fits; the alert and the
    // enrichment block are never truncated
    std::size_t keep = retrieved.size();
    std::string prompt = assemble(keep);
    while (approx_tokens(prompt) > gateway_->max_prompt_tokens() && keep > 0) {
        --keep;
        prompt = assemble(keep);
    }
    if (approx_tokens(prompt) > gateway_->max_prompt_tokens())
        raise(ErrorCode::budget_unsatisfiable,
              "prompt exceeds budget even with zero chunks (~" +
                  std::to_string(approx_tokens(prompt)) + " tokens)");

    GenerationRequest request;
    request.prompt = prompt;
    request.max_output_tokens = options_.max_output_tokens;
    request.seed = options_.seed;

    std::int64_t start = clock_->now_unix_millis();
    std::string plan = gateway_->complete(request);
    if (trace) {
        TraceEvent& e = push_event(trace, "generation", "complete", "incident_response_prompt");
        e.input_digest = fnv1a64_hex(prompt);
        e.output_digest = fnv1a64_hex(plan);
        e.duration_ms = clock_->now_unix_millis() - start;
        e.detail["chunks_kept"] = std::to_string(keep);
        if (keep < retrieved.size()) {
            std::string dropped;
            for (std::size_t i = keep; i < retrieved.size(); ++i) {
                if (!dropped.empty()) dropped += ",";
                dropped += retrieved[i].chunk.chunk_id;
            }
            e.detail["chunks_dropped"] = dropped;
        }
    }
    return plan;
}

IncidentPackage ResponsePipeline::run(const Alert& alert) {
    alert.validate();
    IncidentPackage package;
    package.alert = alert;
    std::vector<TraceEvent>& trace = package.trace;

    // stage 1: standard search (degrades to the sentinel context)
    {
        std::int64_t start = clock_->now_unix_millis();
        std::vector<Ioc> iocs = extract_iocs(alert);
        std::size_t errors = 0;
        LookupObserver observer = [&](const LookupTrace& lt) {
            TraceEvent& e = push_event(&trace, "enrichment", "intel", "lookup " + lt.ioc.key());
            e.input_digest = fnv1a64_hex(lt.ioc.key());
            e.duration_ms = 0;
            if (lt.cache_hit) e.detail["cache_hit"] = "true";
            if (lt.error) {
                e.detail["error"] = lt.detail;
                ++errors;
            }
        };
        package.enrichment = intel_->enrich(alert, iocs, observer);
        TraceEvent& e = push_event(&trace, "enrichment", "stage", "standard_search");
        e.input_digest = fnv1a64_hex(alert.raw_text);
        e.output_digest = fnv1a64_hex(package.enrichment.rendered);
        e.duration_ms = clock_->now_unix_millis() - start;
        e.detail["ioc_count"] = std::to_string(iocs.size());
        e.detail["lookup_errors"] = std::to_string(errors);
        char coverage[32];
        std::snprintf(coverage, sizeof(coverage), "%.4f", package.enrichment.coverage);
        e.detail["coverage"] = coverage;
        if (package.enrichment.rendered == kNoPlatformContext)
            e.detail["sentinel"] = "true";
    }

    // stage 2: expansion (hard failure)
    try {
        std::int64_t start = clock_->now_unix_millis();
        package.expanded = expand_alert(alert, package.enrichment, &trace);
        TraceEvent& e = push_event(&trace, "expansion", "stage", "alert_expansion");
        e.input_digest = package.expanded.derived_from;
        e.output_digest = fnv1a64_hex(package.expanded.text);
        e.duration_ms = clock_->now_unix_millis() - start;
    } catch (const Error& e) {
        throw PipelineError("expansion", e.what(), std::move(package));
    }

    // stage 3: retrieval (empty store degrades to no context)
    try {
        std::int64_t start = clock_->now_unix_millis();
        ExpandedAlert query = package.expanded;
        if (options_.query_raw_alert) query.text = alert.raw_text;
        package.retrieved = retrieve_context(query, options_.retrieval_k, &trace);
        TraceEvent& e = push_event(&trace, "retrieval", "stage", "similarity_search");
        e.input_digest = fnv1a64_hex(query.text);
        e.duration_ms = clock_->now_unix_millis() - start;
        e.detail["k"] = std::to_string(options_.retrieval_k);
        e.detail["results"] = std::to_string(package.retrieved.size());
        e.detail["query_source"] = options_.query_raw_alert ? "raw_alert" : "expanded_alert";
    } catch (const Error& e) {
        throw PipelineError("retrieval", e.what(), std::move(package));
    }

    // stage 4: generation (hard failure)
    try {
        std::int64_t start = clock_->now_unix_millis();
        package.response_plan =
            generate_response(alert, package.enrichment, package.retrieved, &trace);
        TraceEvent& e = push_event(&trace, "generation", "stage", "augmented_generation");
        e.output_digest = fnv1a64_hex(package.response_plan);
        e.duration_ms = clock_->now_unix_millis() - start;
    } catch (const Error& e) {
        throw PipelineError("generation", e.what(), std::move(package));
    }

    return package;
}

} // namespace ctirag
