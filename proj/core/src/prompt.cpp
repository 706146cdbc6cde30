#include "ctirag/prompt.hpp"

#include "ctirag/errors.hpp"
#include "ctirag/util.hpp"

#include <array>

namespace ctirag {

namespace {

struct TemplateSpec {
    TemplateName name;
    const char* file;
    std::uint64_t checksum;
    std::set<std::string> placeholders;
};

const std::array<TemplateSpec, 5>& template_specs() {
    static const std::array<TemplateSpec, 5> specs = {{
        {TemplateName::expansion, "expansion.txt", 0x1fc0749b4b7b65d2ULL,
         {"alert", "virustotal_context"}},
        {TemplateName::incident_response, "incident_response.txt", 0x3c185dc3d25e7b15ULL,
         {"question", "virustotal_context", "context"}},
        {TemplateName::judge_answer_relevance, "judge_answer_relevance.txt",
         0x0ddb9afba89b4cc6ULL, {"alert", "response"}},
        {TemplateName::judge_context_relevance, "judge_context_relevance.txt",
         0x454e1e1d43f93dc9ULL, {"alert", "context"}},
        {TemplateName::judge_groundedness, "judge_groundedness.txt", 0x2e9262d5d5e8acd1ULL,
         {"response", "context"}},
    }};
    return specs;
}

bool placeholder_char(char c) { return (c >= 'a' && c <= 'z') || c == '_'; }

} // namespace

const char* template_name_str(TemplateName name) {
    switch (name) {
    case TemplateName::expansion: return "expansion";
    case TemplateName::incident_response: return "incident_response";
    case TemplateName::judge_answer_relevance: return "judge_answer_relevance";
    case TemplateName::judge_context_relevance: return "judge_context_relevance";
    case TemplateName::judge_groundedness: return "judge_groundedness";
    }
    return "expansion";
}

std::set<std::string> scan_placeholders(const std::string& body) {
    std::set<std::string> out;
    std::size_t i = 0;
    while (i < body.size()) {
        if (body[i] != '{') {
            ++i;
            continue;
        }
        std::size_t j = i + 1;
        while (j < body.size() && placeholder_char(body[j])) ++j;
        if (j > i + 1 && j < body.size() && body[j] == '}') {
            out.insert(body.substr(i + 1, j - i - 1));
            i = j + 1;
        } else {
            ++i;
        }
    }
    return out;
}

std::string render(const PromptTemplate& tmpl, const Bindings& bindings, bool strict) {
    for (const std::string& name : tmpl.placeholders)
        if (!bindings.count(name))
            raise(ErrorCode::missing_binding, "template '" +
                      std::string(template_name_str(tmpl.name)) + "' needs {" + name + "}");
    if (strict) {
        for (const auto& [name, _] : bindings)
            if (!tmpl.placeholders.count(name))
                raise(ErrorCode::unknown_placeholder, "binding '" + name + "' not used by template '" +
                          std::string(template_name_str(tmpl.name)) + "'");
    }

    std::string out;
    out.reserve(tmpl.body.size());
    std::size_t i = 0;
    const std::string& body = tmpl.body;
    while (i < body.size()) {
        if (body[i] == '{') {
            std::size_t j = i + 1;
            while (j < body.size() && placeholder_char(body[j])) ++j;
            if (j > i + 1 && j < body.size() && body[j] == '}') {
                std::string name = body.substr(i + 1, j - i - 1);
                auto it = bindings.find(name);
                if (it != bindings.end()) {
                    out.append(it->second);
                    i = j + 1;
                    continue;
                }
            }
        }
        out.push_back(body[i]);
        ++i;
    }
    return out;
}

TemplateSet TemplateSet::load(const std::string& dir) {
    TemplateSet set;
    for (const TemplateSpec& spec : template_specs()) {
        std::string path = dir + "/" + spec.file;
        std::string body = read_file(path);
        std::uint64_t sum = fnv1a64(body);
        if (sum != spec.checksum)
            raise(ErrorCode::template_checksum_mismatch,
                  path + " has checksum " + fnv1a64_hex(body) + ", expected pinned value");
        PromptTemplate tmpl;
        tmpl.name = spec.name;
        tmpl.body = std::move(body);
        tmpl.placeholders = scan_placeholders(tmpl.body);
        if (tmpl.placeholders != spec.placeholders)
            raise(ErrorCode::template_checksum_mismatch,
                  path + " placeholder set differs from the declared contract");
        set.templates_.emplace(spec.name, std::move(tmpl));
    }
    return set;
}

const PromptTemplate& TemplateSet::get(TemplateName name) const {
    auto it = templates_.find(name);
    if (it == templates_.end())
        raise(ErrorCode::invalid_params,
              std::string("template not loaded: ") + template_name_str(name));
    return it->second;
}

std::uint64_t TemplateSet::pinned_checksum(TemplateName name) {
    for (const TemplateSpec& spec : template_specs())
        if (spec.name == name) return spec.checksum;
    return 0;
}

} // namespace ctirag
