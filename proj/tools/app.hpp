#pragma once

#include "ctirag/config.hpp"
#include "ctirag/gateway.hpp"
#include "ctirag/intel.hpp"
#include "ctirag/judge.hpp"
#include "ctirag/knowledge_base.hpp"
#include "ctirag/pipeline.hpp"
#include "ctirag/prompt.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace ctirag::app {

// Everything a command needs, assembled once from the resolved config. The
// CLI subcommands and the HTTP service share these code paths.
struct Components {
    RunConfig config;
    bool deterministic = false;
    ClockPtr clock;
    std::shared_ptr<TemplateSet> templates;
    std::shared_ptr<ModelGateway> gateway;
    std::map<std::string, std::shared_ptr<ModelGateway>> judge_profiles;
    std::string default_profile;
    std::shared_ptr<IntelClient> intel;
    std::shared_ptr<KnowledgeBase> kb; // null when the store is absent
    std::shared_ptr<ResponsePipeline> pipeline;
    std::shared_ptr<JudgeHarness> judge;
    bool store_absent = false;
};

Components build_components(const RunConfig& config, bool load_store);

// exit codes: 0 ok, 1 config error, 2 partial ingest failure
int cmd_ingest(const RunConfig& config, const std::string& corpus_dir,
               const std::string& manifest_path, std::ostream& out, std::ostream& err);

// exit codes: 0 when >= 1 package succeeded, 3 when none did, 1 config/store
int cmd_respond(const RunConfig& config, const std::string& alerts_path,
                const std::string& out_path, int jobs, std::ostream& out, std::ostream& err);

// exit codes: 0 ok, 1 empty input / config error
int cmd_evaluate(const RunConfig& config, const std::string& packages_path,
                 const std::vector<std::string>& metric_names,
                 const std::vector<std::string>& profile_names,
                 const std::string& human_scores_path, const std::string& out_prefix,
                 std::ostream& out, std::ostream& err);

// exit codes: 0 ok, 1 bad arguments / IO
int cmd_simulate(const RunConfig& config, std::size_t count, std::uint64_t seed,
                 const std::string& out_path, const std::string& scenarios_out,
                 std::ostream& out, std::ostream& err);

} // namespace ctirag::app
