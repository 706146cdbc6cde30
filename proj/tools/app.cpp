#include "app.hpp"

#include "ctirag/alert.hpp"
#include "ctirag/corpus.hpp"
#include "ctirag/errors.hpp"
#include "ctirag/log.hpp"
#include "ctirag/util.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <thread>

namespace ctirag::app {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// fixed origin for deterministic runs and fixture fetched_at stamps
constexpr std::int64_t kDeterministicEpoch = 1725753600; // 2024-09-08T00:00:00Z

// Routes complete() and embed() to independently configured backends, so
// e.g. a remote generator can be paired with the mock embedder.
class SplitBackend final : public TextBackend {
public:
    SplitBackend(std::shared_ptr<TextBackend> completer, std::shared_ptr<TextBackend> embedder)
        : completer_(std::move(completer)), embedder_(std::move(embedder)) {}

    std::string complete(const GenerationRequest& request) override {
        return completer_->complete(request);
    }
    EmbeddingVector embed(const std::string& text) override { return embedder_->embed(text); }
    const char* kind() const override { return completer_->kind(); }

private:
    std::shared_ptr<TextBackend> completer_;
    std::shared_ptr<TextBackend> embedder_;
};

std::shared_ptr<TextBackend> make_mock_backend(const RunConfig& config, const std::string& prefix,
                                               std::uint64_t seed, std::size_t dim) {
    MockBackendOptions options;
    options.dim = dim;
    options.seed = seed;
    // profile sub-keys fall back to the base gateway values
    std::string script =
        config.get_str(prefix + "mock_script", config.get_str("gateway.mock_script", ""));
    if (!script.empty() && fs::exists(script)) options.rules = MockBackend::load_rules(script);
    return std::make_shared<MockBackend>(std::move(options));
}

std::shared_ptr<TextBackend> make_remote_backend(const RunConfig& config,
                                                 const std::string& prefix) {
    RemoteBackendOptions options;
    options.base_url = config.get_str(prefix + "base_url", config.get_str("gateway.base_url"));
    options.api_key = config.get_str(prefix + "api_key", config.get_str("gateway.api_key"));
    options.model = config.get_str(prefix + "model", config.get_str("gateway.model"));
    options.embed_model =
        config.get_str(prefix + "embed_model", config.get_str("gateway.embed_model"));
    options.retry_max = static_cast<int>(config.get_int("gateway.retry_max"));
    options.backoff_ms = static_cast<int>(config.get_int("gateway.backoff_ms"));
    return std::make_shared<RemoteBackend>(std::move(options));
}

std::shared_ptr<ModelGateway> make_gateway(const RunConfig& config, const std::string& backend_kind,
                                           const std::string& prefix, std::uint64_t seed) {
    std::shared_ptr<TextBackend> completer;
    if (backend_kind == "mock") {
        completer =
            make_mock_backend(config, prefix, seed, static_cast<std::size_t>(config.get_int("kb.dim")));
    } else if (backend_kind == "remote") {
        completer = make_remote_backend(config, prefix);
    } else {
        raise(ErrorCode::invalid_params, "gateway.backend must be mock or remote: " + backend_kind);
    }

    std::shared_ptr<TextBackend> embedder;
    std::string embedder_kind = config.get_str("kb.embedder");
    if (embedder_kind == backend_kind) {
        embedder = completer;
    } else if (embedder_kind == "mock") {
        embedder = make_mock_backend(config, prefix, seed,
                                     static_cast<std::size_t>(config.get_int("kb.dim")));
    } else if (embedder_kind == "remote") {
        embedder = make_remote_backend(config, prefix);
    } else {
        raise(ErrorCode::invalid_params, "kb.embedder must be mock or remote: " + embedder_kind);
    }

    GatewayOptions options;
    options.max_prompt_tokens = static_cast<std::size_t>(config.get_int("gateway.max_prompt_tokens"));
    options.inflight_limit = static_cast<int>(config.get_int("gateway.inflight_limit"));
    auto backend = std::make_unique<SplitBackend>(std::move(completer), std::move(embedder));
    return std::make_shared<ModelGateway>(std::move(backend), options);
}

std::shared_ptr<IntelBackend> make_intel_backend(const RunConfig& config) {
    std::string kind = config.get_str("intel.backend");
    if (kind == "fixture") {
        std::string path = config.get_str("intel.fixture_path");
        if (!fs::exists(path))
            raise(ErrorCode::invalid_params, "intel fixture file not found: " + path);
        return std::make_shared<FixtureIntelBackend>(path);
    }
    if (kind == "down") return std::make_shared<DownIntelBackend>();
    if (kind == "live") {
        LiveIntelOptions options;
        options.base_url = config.get_str("intel.base_url");
        options.api_key = config.get_str("intel.api_key");
        options.key_header = config.get_str("intel.key_header");
        static const std::pair<const char*, IocKind> kinds[] = {
            {"intel.path.ipv4", IocKind::ipv4},     {"intel.path.ipv6", IocKind::ipv6},
            {"intel.path.domain", IocKind::domain}, {"intel.path.url", IocKind::url},
            {"intel.path.md5", IocKind::md5},       {"intel.path.sha1", IocKind::sha1},
            {"intel.path.sha256", IocKind::sha256},
        };
        for (const auto& [key, kind_enum] : kinds)
            options.path_templates[kind_enum] = config.get_str(key);
        return std::make_shared<LiveIntelBackend>(std::move(options));
    }
    raise(ErrorCode::invalid_params, "intel.backend must be fixture, live or down: " + kind);
}

LogLevel parse_log_level(const std::string& name) {
    if (name == "debug") return LogLevel::debug;
    if (name == "info") return LogLevel::info;
    if (name == "error") return LogLevel::error;
    return LogLevel::warn;
}

std::vector<std::string> profile_names_in(const RunConfig& config) {
    std::vector<std::string> names;
    for (const auto& [key, _] : config.entries()) {
        if (!starts_with(key, "gateway.profile.")) continue;
        std::string rest = key.substr(std::string("gateway.profile.").size());
        std::size_t dot = rest.find('.');
        if (dot == std::string::npos) continue;
        std::string name = rest.substr(0, dot);
        if (std::find(names.begin(), names.end(), name) == names.end()) names.push_back(name);
    }
    return names;
}

std::string plans_path_for(const std::string& packages_path) {
    std::string base = packages_path;
    if (base.size() > 6 && base.substr(base.size() - 6) == ".jsonl")
        base = base.substr(0, base.size() - 6);
    return base + ".plans.txt";
}

} // namespace

Components build_components(const RunConfig& config, bool load_store) {
    set_log_level(parse_log_level(config.get_str("run.log_level", "warn")));
    for (const std::string& key : config.unknown_keys())
        log_warn("config key not recognized (kept as-is): " + key);

    Components c;
    c.config = config;
    c.deterministic = deterministic_mode(config);
    c.clock = c.deterministic ? std::make_shared<FixedClock>(kDeterministicEpoch)
                              : ClockPtr(system_clock());

    c.templates = std::make_shared<TemplateSet>(TemplateSet::load(config.get_str("templates.dir")));

    std::uint64_t seed = static_cast<std::uint64_t>(config.get_int("gateway.seed"));
    std::string backend_kind = config.get_str("gateway.backend");
    c.gateway = make_gateway(config, backend_kind, "gateway.", seed);

    c.default_profile = backend_kind == "mock" ? "mock" : config.get_str("gateway.model");
    c.judge_profiles[c.default_profile] = c.gateway;
    for (const std::string& name : profile_names_in(config)) {
        std::string prefix = "gateway.profile." + name + ".";
        std::string kind = config.get_str(prefix + "backend", backend_kind);
        std::uint64_t profile_seed = seed;
        if (config.has(prefix + "seed"))
            profile_seed = static_cast<std::uint64_t>(config.get_int(prefix + "seed"));
        c.judge_profiles[name] = make_gateway(config, kind, prefix, profile_seed);
    }

    IntelClientOptions intel_options;
    intel_options.cache_ttl_s = config.get_int("intel.cache_ttl_s");
    intel_options.rate_per_min = static_cast<int>(config.get_int("intel.rate_per_min"));
    intel_options.retry_max = static_cast<int>(config.get_int("intel.retry_max"));
    intel_options.backoff_ms = static_cast<int>(config.get_int("intel.backoff_ms"));
    intel_options.clock = c.clock;
    intel_options.fixture_fetched_at = kDeterministicEpoch;
    c.intel = std::make_shared<IntelClient>(make_intel_backend(config), intel_options);

    KbOptions kb_options;
    kb_options.dim = static_cast<std::size_t>(config.get_int("kb.dim"));
    kb_options.max_chunk_chars = static_cast<std::size_t>(config.get_int("kb.max_chunk_chars"));
    kb_options.overlap_chars = static_cast<std::size_t>(config.get_int("kb.overlap_chars"));
    kb_options.embedder_name = config.get_str("kb.embedder");

    std::shared_ptr<ModelGateway> embed_gateway = c.gateway;
    EmbedderFn embedder = [embed_gateway](const std::string& text) {
        return embed_gateway->embed(text);
    };

    std::string store_path = config.get_str("kb.store_path");
    if (load_store) {
        if (fs::exists(store_path)) {
            c.kb = std::make_shared<KnowledgeBase>(
                KnowledgeBase::load(store_path, embedder, kb_options));
        } else {
            c.store_absent = true;
        }
    } else {
        c.kb = fs::exists(store_path)
                   ? std::make_shared<KnowledgeBase>(
                         KnowledgeBase::load(store_path, embedder, kb_options))
                   : std::make_shared<KnowledgeBase>(embedder, kb_options);
    }

    if (c.kb) {
        PipelineOptions pipeline_options;
        pipeline_options.retrieval_k = static_cast<std::size_t>(config.get_int("pipeline.k"));
        pipeline_options.query_raw_alert = config.get_bool("pipeline.query_raw_alert");
        pipeline_options.max_output_tokens =
            static_cast<int>(config.get_int("pipeline.max_output_tokens"));
        pipeline_options.seed = seed;
        c.pipeline = std::make_shared<ResponsePipeline>(c.intel, c.kb, c.gateway, c.templates,
                                                        pipeline_options, c.clock);
    }

    JudgeOptions judge_options;
    judge_options.convention = config.get_str("judge.variance_convention") == "sample"
                                   ? VarianceConvention::sample
                                   : VarianceConvention::population;
    judge_options.max_output_tokens = static_cast<int>(config.get_int("judge.max_output_tokens"));
    // no request-level seed: each profile's backend applies its own,
    // otherwise per-profile seeds would be overridden
    judge_options.seed = std::nullopt;
    c.judge = std::make_shared<JudgeHarness>(c.judge_profiles, c.templates, judge_options);
    return c;
}

int cmd_ingest(const RunConfig& config, const std::string& corpus_dir,
               const std::string& manifest_path, std::ostream& out, std::ostream& err) {
    Components c;
    json manifest;
    try {
        RunConfig effective = config;
        effective.set("intel.backend", "down"); // ingest never queries the platform
        c = build_components(effective, /*load_store=*/false);
        manifest = json::parse(read_file(manifest_path), nullptr, false);
        if (manifest.is_discarded() || !manifest.is_object())
            raise(ErrorCode::invalid_params, "manifest must be a JSON object: " + manifest_path);
        if (!fs::is_directory(corpus_dir))
            raise(ErrorCode::invalid_params, "corpus dir not found: " + corpus_dir);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }

    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(corpus_dir))
        if (entry.is_regular_file()) files.push_back(entry.path().filename().string());
    std::sort(files.begin(), files.end());

    bool partial = false;
    std::size_t ingested = 0;
    for (const std::string& file : files) {
        if (!manifest.contains(file)) {
            err << "warning: no manifest entry for " << file << ", skipped\n";
            partial = true;
            continue;
        }
        try {
            const json& m = manifest[file];
            CtiDocument doc;
            doc.doc_id = m.at("doc_id").get<std::string>();
            doc.title = m.value("title", doc.doc_id);
            if (m.contains("year")) doc.year = m["year"].get<int>();
            doc.source_uri = m.value("source_uri", "");
            doc.body = read_file((fs::path(corpus_dir) / file).string());
            std::size_t chunks = c.kb->ingest(doc);
            out << doc.doc_id << ": " << chunks << " chunks\n";
            ++ingested;
        } catch (const std::exception& e) {
            err << "error: " << file << ": " << e.what() << "\n";
            partial = true;
        }
    }
    // manifest entries whose file is missing are failures too
    for (auto& [file, _] : manifest.items()) {
        if (std::find(files.begin(), files.end(), file) == files.end()) {
            err << "warning: manifest lists missing file " << file << "\n";
            partial = true;
        }
    }

    try {
        c.kb->persist(config.get_str("kb.store_path"));
    } catch (const Error& e) {
        err << "error: persist failed: " << e.what() << "\n";
        return 1;
    }
    out << ingested << " documents, store size " << c.kb->size() << " chunks ("
        << c.kb->document_count() << " documents)\n";
    return partial ? 2 : 0;
}

int cmd_respond(const RunConfig& config, const std::string& alerts_path,
                const std::string& out_path, int jobs, std::ostream& out, std::ostream& err) {
    Components c;
    try {
        c = build_components(config, /*load_store=*/true);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    if (c.store_absent || !c.pipeline) {
        err << "error: knowledge-base store not found at '" << config.get_str("kb.store_path")
            << "'; run the ingest command first or point kb.store_path at an existing store\n";
        return 1;
    }

    std::vector<std::pair<std::size_t, std::string>> line_errors;
    std::vector<Alert> alerts;
    try {
        alerts = read_alert_batch(alerts_path, &line_errors);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    for (const auto& [lineno, message] : line_errors)
        err << "warning: " << alerts_path << ":" << lineno << ": " << message << "\n";

    if (c.deterministic && jobs != 1) {
        log_info("deterministic mode forces --jobs 1");
        jobs = 1;
    }
    if (jobs < 1) jobs = 1;

    std::vector<std::string> package_lines(alerts.size());
    std::vector<std::string> plan_texts(alerts.size());
    std::atomic<std::size_t> succeeded{0};
    std::atomic<std::size_t> next{0};

    auto worker = [&]() {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= alerts.size()) return;
            const Alert& alert = alerts[i];
            try {
                IncidentPackage package = c.pipeline->run(alert);
                package_lines[i] = package_to_json(package);
                plan_texts[i] = "=== alert " + alert.id + " ===\n" + package.response_plan + "\n";
                succeeded.fetch_add(1);
            } catch (const PipelineError& e) {
                package_lines[i] =
                    failed_package_to_json(alert, e.stage(), e.what(), e.partial().trace);
                plan_texts[i] = "=== alert " + alert.id + " === FAILED: " + e.what() + "\n";
            } catch (const std::exception& e) {
                package_lines[i] = failed_package_to_json(alert, "setup", e.what(), {});
                plan_texts[i] = "=== alert " + alert.id + " === FAILED: " + e.what() + "\n";
            }
        }
    };
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }

    std::ostringstream packages;
    std::ostringstream plans;
    for (std::size_t i = 0; i < alerts.size(); ++i) {
        packages << package_lines[i] << '\n';
        plans << plan_texts[i];
    }
    try {
        write_file(out_path, packages.str());
        write_file(plans_path_for(out_path), plans.str());
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }

    out << succeeded.load() << "/" << alerts.size() << " alerts produced packages -> " << out_path
        << "\n";
    return succeeded.load() >= 1 ? 0 : 3;
}

int cmd_evaluate(const RunConfig& config, const std::string& packages_path,
                 const std::vector<std::string>& metric_names,
                 const std::vector<std::string>& profile_names,
                 const std::string& human_scores_path, const std::string& out_prefix,
                 std::ostream& out, std::ostream& err) {
    Components c;
    try {
        RunConfig effective = config;
        effective.set("intel.backend", "down"); // judging reads packages only
        c = build_components(effective, /*load_store=*/true);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }

    std::vector<IncidentPackage> packages;
    try {
        std::ifstream in(packages_path);
        if (!in) raise(ErrorCode::store_io, "cannot open packages file: " + packages_path);
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (trim(line).empty()) continue;
            try {
                packages.push_back(package_from_json(line));
            } catch (const Error& e) {
                err << "warning: " << packages_path << ":" << lineno << ": " << e.what() << "\n";
            }
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    if (packages.empty()) {
        err << "error: no usable packages in " << packages_path << "\n";
        return 1;
    }

    std::vector<Metric> metrics;
    if (metric_names.empty()) {
        metrics = {Metric::answer_relevance, Metric::context_relevance, Metric::groundedness};
    } else {
        for (const std::string& name : metric_names) {
            Metric metric;
            if (!metric_from_name(name, metric)) {
                err << "error: unknown metric: " << name << "\n";
                return 1;
            }
            metrics.push_back(metric);
        }
    }
    std::vector<std::string> profiles = profile_names;
    if (profiles.empty()) profiles = {c.default_profile};

    BatchNotes notes;
    std::vector<EvaluationReport> reports;
    try {
        reports = c.judge->evaluate_batch(packages, metrics, profiles, &notes);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }

    if (!human_scores_path.empty()) {
        try {
            std::vector<MetricScore> human = read_human_scores(human_scores_path);
            std::map<std::pair<Metric, Variant>, std::vector<MetricScore>> grouped;
            for (MetricScore& s : human) grouped[{s.metric, s.variant}].push_back(std::move(s));
            for (auto& [key, scores] : grouped)
                reports.push_back(aggregate(scores, c.judge->options().convention));
        } catch (const Error& e) {
            err << "error: human scores: " << e.what() << "\n";
            return 1;
        }
    }

    std::ostringstream machine;
    for (const EvaluationReport& r : reports) machine << report_to_json(r) << '\n';
    std::string table = render_report_table(reports);
    std::ostringstream text;
    text << table;
    if (!notes.failures.empty()) {
        text << "\nskipped cells:\n";
        for (const std::string& note : notes.failures) text << "  " << note << '\n';
    }
    try {
        write_file(out_prefix + ".jsonl", machine.str());
        write_file(out_prefix + ".txt", text.str());
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    out << table;
    return 0;
}

int cmd_simulate(const RunConfig& config, std::size_t count, std::uint64_t seed,
                 const std::string& out_path, const std::string& scenarios_out, std::ostream& out,
                 std::ostream& err) {
    (void)config;
    if (count < 1) {
        err << "error: count must be >= 1\n";
        return 1;
    }
    try {
        write_alert_batch(out_path, synthesize_batch(count, seed));
        if (!scenarios_out.empty()) write_file(scenarios_out, scenarios_to_jsonl());
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    out << "wrote " << count << " simulated alerts -> " << out_path << "\n";
    return 0;
}

} // namespace ctirag::app
