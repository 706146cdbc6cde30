#pragma once

#include "ctirag/alert.hpp"
#include "ctirag/errors.hpp"
#include "ctirag/gateway.hpp"
#include "ctirag/intel.hpp"
#include "ctirag/knowledge_base.hpp"
#include "ctirag/prompt.hpp"
#include "ctirag/util.hpp"

#include <map>
#include <memory>
#include <string>
#include <vector>

namespace ctirag {

struct ExpandedAlert {
    std::string alert_id;
    std::string text;         // LLM-expanded incident narrative
    std::string derived_from; // digest of (alert raw_text, enrichment rendered)
};

// One trace entry. `kind` is "stage" for the four pipeline stages and
// "intel" / "embed" / "complete" for external calls; every external call
// appears exactly once.
struct TraceEvent {
    int seq = 0;
    std::string stage; // enrichment | expansion | retrieval | generation
    std::string kind;
    std::string name;
    std::string input_digest;
    std::string output_digest;
    std::int64_t duration_ms = 0;
    std::map<std::string, std::string> detail;
};

struct IncidentPackage {
    Alert alert;
    EnrichmentContext enrichment;
    ExpandedAlert expanded;
    std::vector<RetrievalResult> retrieved;
    std::string response_plan;
    std::vector<TraceEvent> trace;
};

inline constexpr int kPackageSchemaVersion = 1;
inline constexpr const char* kNoCtiContext = "NO CTI CONTEXT RETRIEVED";

std::string package_to_json(const IncidentPackage& package);
IncidentPackage package_from_json(const std::string& json_text);
std::string failed_package_to_json(const Alert& alert, const std::string& stage,
                                   const std::string& message,
                                   const std::vector<TraceEvent>& trace);

// Context block handed to the generation and judge prompts: each chunk is
// prefixed by its provenance marker "[[doc:<doc_id> chunk:<ordinal>
// score:<s>]]". Empty input yields the fixed kNoCtiContext line.
std::string render_chunk_context(const std::vector<RetrievalResult>& retrieved);

class PipelineError : public Error {
public:
    PipelineError(std::string stage, std::string message, IncidentPackage partial);
    const std::string& stage() const { return stage_; }
    const IncidentPackage& partial() const { return partial_; }

private:
    std::string stage_;
    IncidentPackage partial_;
};

struct PipelineOptions {
    std::size_t retrieval_k = 4;
    // ablation switch: query the store with the raw alert instead of the
    // expanded narrative
    bool query_raw_alert = false;
    int max_output_tokens = 1024;
    std::optional<std::uint64_t> seed;
};

// Two-phase flow: standard search (IOC extraction + platform enrichment),
// alert expansion, similarity retrieval, augmented generation. Enrichment
// failures degrade to the sentinel context; expansion/generation failures
// abort with the partial trace preserved.
class ResponsePipeline {
public:
    ResponsePipeline(std::shared_ptr<IntelClient> intel, std::shared_ptr<KnowledgeBase> kb,
                     std::shared_ptr<ModelGateway> gateway, std::shared_ptr<TemplateSet> templates,
                     PipelineOptions options, ClockPtr clock = {});

    ExpandedAlert expand_alert(const Alert& alert, const EnrichmentContext& enrichment,
                               std::vector<TraceEvent>* trace = nullptr);
    std::vector<RetrievalResult> retrieve_context(const ExpandedAlert& expanded, std::size_t k,
                                                  std::vector<TraceEvent>* trace = nullptr);
    std::string generate_response(const Alert& alert, const EnrichmentContext& enrichment,
                                  const std::vector<RetrievalResult>& retrieved,
                                  std::vector<TraceEvent>* trace = nullptr);

    IncidentPackage run(const Alert& alert); // throws PipelineError

    const PipelineOptions& options() const { return options_; }

private:
    TraceEvent& push_event(std::vector<TraceEvent>* trace, const std::string& stage,
                           const std::string& kind, const std::string& name);

    std::shared_ptr<IntelClient> intel_;
    std::shared_ptr<KnowledgeBase> kb_;
    std::shared_ptr<ModelGateway> gateway_;
    std::shared_ptr<TemplateSet> templates_;
    PipelineOptions options_;
    ClockPtr clock_;
};

} // namespace ctirag
