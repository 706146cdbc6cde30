#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>

namespace ctirag {

enum class TemplateName {
    expansion,
    incident_response,
    judge_answer_relevance,
    judge_context_relevance,
    judge_groundedness,
};

const char* template_name_str(TemplateName name);

struct PromptTemplate {
    TemplateName name = TemplateName::expansion;
    std::string body;
    std::set<std::string> placeholders; // names appearing as "{name}" in body
};

using Bindings = std::map<std::string, std::string>;

// Substitutes every "{name}" placeholder with its binding. Substitution is
// literal and single-pass: a binding value containing "{alert}" is inserted
// verbatim, never re-expanded.
//
// Throws MissingBinding when a placeholder has no binding; in strict mode
// (default) also UnknownPlaceholder when bindings carry names the template
// does not declare.
std::string render(const PromptTemplate& tmpl, const Bindings& bindings, bool strict = true);

// Extracts the set of "{name}" tokens (lowercase names with underscores).
std::set<std::string> scan_placeholders(const std::string& body);

// The five shipped templates, loaded from one text file per template
// ("<name>.txt" under the template directory). File contents are pinned by
// checksum at load time so silent edits are caught immediately.
class TemplateSet {
public:
    static TemplateSet load(const std::string& dir); // throws on any mismatch

    const PromptTemplate& get(TemplateName name) const;

    // Pinned FNV-1a64 of the shipped asset for a template.
    static std::uint64_t pinned_checksum(TemplateName name);

private:
    std::map<TemplateName, PromptTemplate> templates_;
};

} // namespace ctirag
