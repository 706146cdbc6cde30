#include "app.hpp"
#include "service.hpp"

#include "ctirag/errors.hpp"
#include "ctirag/version.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace ctirag;

int main(int argc, char** argv) {
    CLI::App cli{"ctirag - CTI retrieval-augmented incident response toolkit"};
    cli.set_version_flag("--version", std::string(kVersion));
    cli.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    bool verbose = false;
    cli.add_option("--config", config_path, "JSON config file");
    cli.add_option("--set", overrides, "override a config key (key=value), repeatable");
    cli.add_flag("-v,--verbose", verbose, "verbose logging");

    // ingest
    auto* ingest = cli.add_subcommand("ingest", "chunk, embed and store a CTI corpus");
    std::string corpus_dir, manifest_path, store_path;
    ingest->add_option("--corpus", corpus_dir, "directory of plain-text CTI documents")
        ->required();
    ingest->add_option("--manifest", manifest_path,
                       "JSON manifest: filename -> {doc_id, title, year, source_uri}")
        ->required();
    ingest->add_option("--store", store_path, "store path (kb.store_path)");

    // respond
    auto* respond = cli.add_subcommand("respond", "run the response pipeline over an alert batch");
    std::string alerts_path, packages_out = "packages.jsonl";
    int jobs = 1;
    respond->add_option("--alerts", alerts_path, "JSON-lines alert batch")->required();
    respond->add_option("--out", packages_out, "output packages file (JSON-lines)");
    respond->add_option("--jobs", jobs, "parallel alerts (deterministic mode forces 1)");
    respond->add_option("--store", store_path, "store path (kb.store_path)");

    // evaluate
    auto* evaluate = cli.add_subcommand("evaluate", "LLM-as-judge scoring of packages");
    std::string eval_packages, out_prefix = "report", human_scores;
    std::vector<std::string> metric_names, profile_names;
    evaluate->add_option("--packages", eval_packages, "packages file from respond")->required();
    evaluate->add_option("--out-prefix", out_prefix, "writes <prefix>.jsonl and <prefix>.txt");
    evaluate->add_option("--metrics", metric_names,
                         "metrics to score (answer_relevance, context_relevance, groundedness)");
    evaluate->add_option("--profiles", profile_names, "judge profiles (default: the configured gateway)");
    evaluate->add_option("--human-scores", human_scores,
                         "expert score file (JSON-lines), reported under profile 'expert'");

    // simulate
    auto* simulate = cli.add_subcommand("simulate", "generate synthetic SIEM alerts");
    std::size_t count = 10;
    std::uint64_t seed = 7;
    std::string alerts_out = "alerts.jsonl", scenarios_out;
    simulate->add_option("--count", count, "number of alerts");
    simulate->add_option("--seed", seed, "generator seed");
    simulate->add_option("--out", alerts_out, "output alert batch file");
    simulate->add_option("--scenarios-out", scenarios_out, "also export the scenario table");

    // serve
    auto* serve_cmd = cli.add_subcommand("serve", "HTTP service over the same pipeline");
    std::string bind_addr;
    serve_cmd->add_option("--bind", bind_addr, "host:port (default serve.bind)");
    serve_cmd->add_option("--store", store_path, "store path (kb.store_path)");

    CLI11_PARSE(cli, argc, argv);

    RunConfig config = RunConfig::defaults();
    try {
        if (!config_path.empty()) config.load_file(config_path);
        config.load_env();
        for (const std::string& kv : overrides) config.set_kv(kv);
        if (verbose) config.set("run.log_level", "info");
        if (!store_path.empty()) config.set("kb.store_path", store_path);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    try {
        if (ingest->parsed())
            return app::cmd_ingest(config, corpus_dir, manifest_path, std::cout, std::cerr);
        if (respond->parsed())
            return app::cmd_respond(config, alerts_path, packages_out, jobs, std::cout, std::cerr);
        if (evaluate->parsed())
            return app::cmd_evaluate(config, eval_packages, metric_names, profile_names,
                                     human_scores, out_prefix, std::cout, std::cerr);
        if (simulate->parsed())
            return app::cmd_simulate(config, count, seed, alerts_out, scenarios_out, std::cout,
                                     std::cerr);
        if (serve_cmd->parsed())
            return app::serve(config, bind_addr.empty() ? config.get_str("serve.bind") : bind_addr);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
