#include "layoutforge/slow_system.hpp"

#include <algorithm>
#include <cctype>

#include "layoutforge/errors.hpp"
#include "layoutforge/llm.hpp"

namespace layoutforge {

namespace {

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

std::string lowercase(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

std::string library_key(const RelationLibrary& lib) {
    std::string out;
    for (const auto& name : lib.names()) {
        if (!out.empty()) out += ", ";
        out += name;
    }
    return out;
}

std::string corrections_section(const std::vector<std::string>& issues) {
    std::string out = "\n\nCorrections requested by the reviewer:\n";
    for (const auto& issue : issues) out += "- " + issue + "\n";
    out += "Rewrite the description so that it addresses every point.\n";
    return out;
}

}  // namespace

std::set<std::string> find_mentions(std::string_view text, const std::vector<std::string>& names) {
    // Spans claimed by every occurrence of every name.
    struct Span {
        std::size_t begin;
        std::size_t end;
    };
    std::vector<std::vector<Span>> spans(names.size());
    for (std::size_t i = 0; i < names.size(); ++i) {
        const std::string& name = names[i];
        if (name.empty()) continue;
        for (std::size_t pos = text.find(name); pos != std::string_view::npos; pos = text.find(name, pos + 1)) {
            const std::size_t end = pos + name.size();
            if (pos > 0 && is_word_char(text[pos - 1]) && is_word_char(name.front())) continue;
            if (end < text.size() && is_word_char(text[end]) && is_word_char(name.back())) continue;
            spans[i].push_back({pos, end});
        }
    }

    std::set<std::string> found;
    for (std::size_t i = 0; i < names.size(); ++i) {
        for (const Span& s : spans[i]) {
            bool covered = false;
            for (std::size_t j = 0; j < names.size() && !covered; ++j) {
                if (j == i || names[j].size() <= names[i].size()) continue;
                for (const Span& o : spans[j]) {
                    if (o.begin <= s.begin && s.end <= o.end) {
                        covered = true;
                        break;
                    }
                }
            }
            if (!covered) {
                found.insert(names[i]);
                break;
            }
        }
    }
    return found;
}

SceneDescription generate_description(const SceneSpec& scene, const RelationLibrary& lib, Gateway& gateway,
                                      std::string_view extra) {
    std::string prompt = render_template("rrg_describe", {{"relations_library_key", library_key(lib)},
                                                          {"obj_list", python_list(scene.object_names())},
                                                          {"task_instruction", scene.instruction}});
    prompt += extra;
    const std::string reply = gateway.complete(gateway.make_request(std::move(prompt), "rrg_describe"));

    SceneDescription desc;
    desc.text = parse_tagged_block(reply, "</Description>");
    desc.mentioned_objects = find_mentions(desc.text, scene.object_names());
    desc.iterations_used = 1;
    return desc;
}

CritiqueResult parse_critique(std::string_view reply) {
    const std::string verdict = lowercase(parse_tagged_block(reply, "</output>"));
    CritiqueResult result;
    if (verdict == "true") {
        result.approved = true;
    } else if (verdict == "false") {
        result.approved = false;
    } else {
        throw ParseError("unparseable critique verdict: " + verdict);
    }
    if (result.approved) return result;

    if (reply.find("</issue>") == std::string_view::npos) return result;
    const std::string block = parse_tagged_block(reply, "</issue>");
    std::size_t start = 0;
    while (start <= block.size()) {
        std::size_t end = block.find('\n', start);
        if (end == std::string::npos) end = block.size();
        std::string line = trim(std::string_view(block).substr(start, end - start));
        if (!line.empty()) result.issues.push_back(std::move(line));
        start = end + 1;
    }
    return result;
}

CritiqueResult critique_description(const SceneSpec& scene, const SceneDescription& desc, Gateway& gateway) {
    std::string prompt = render_template("rrg_critique", {{"obj_list", python_list(scene.object_names())},
                                                          {"task_instruction", scene.instruction},
                                                          {"description", desc.text}});
    return parse_critique(gateway.complete(gateway.make_request(std::move(prompt), "rrg_critique")));
}

SceneDescription rrg(const SceneSpec& scene, const RelationLibrary& lib, Gateway& gateway, int max_iters,
                     std::string_view feedback) {
    if (max_iters < 1) throw InvariantError("rrg needs max_iters >= 1");
    const std::vector<std::string> names = scene.object_names();

    SceneDescription last;
    std::vector<std::string> issues;
    for (int iter = 1; iter <= max_iters; ++iter) {
        std::string extra(feedback);
        if (!issues.empty()) extra += corrections_section(issues);

        last = generate_description(scene, lib, gateway, extra);
        last.iterations_used = iter;
        const CritiqueResult verdict = critique_description(scene, last, gateway);

        issues = verdict.issues;
        for (const auto& name : names) {
            if (last.mentioned_objects.count(name)) continue;
            const bool raised = std::any_of(issues.begin(), issues.end(), [&](const std::string& issue) {
                return find_mentions(issue, names).count(name) != 0;
            });
            if (!raised) issues.push_back("The object " + name + " is not described.");
        }
        if (verdict.approved && last.mentioned_objects.size() == names.size()) {
            last.approved = true;
            return last;
        }
        if (issues.empty()) issues.push_back("The reviewer rejected the description.");
    }
    last.approved = false;
    return last;
}

}  // namespace layoutforge
