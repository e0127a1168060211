#include <functional>
#include <sstream>

#include "json_codecs.hpp"
#include "layoutforge/errors.hpp"
#include "layoutforge/llm.hpp"
#include "layoutforge/relations.hpp"

namespace layoutforge {

using json_codecs::json;

namespace {

constexpr int kRetries = 2;

json parse_reply_json(const std::string& block, std::string_view what) {
    return json_codecs::parse_document(json_codecs::strip_trailing_commas(block), what);
}

std::string entry_line(const RelationDef& def) {
    json body;
    body["type"] = std::string(to_string(def.arity));
    body["definition"] = def.definition;
    if (def.rpc) body["RPC"] = json::array({(*def.rpc)[0], (*def.rpc)[1], (*def.rpc)[2]});
    return json{{def.name, body}}.dump();
}

std::string library_listing(const RelationLibrary& lib) {
    std::string out;
    for (const auto& [name, entry] : lib.entries()) {
        out += entry_line(entry.def);
        out += '\n';
    }
    return out;
}

// Sends `prompt`, handing the reply to `accept`. A ParseError or SchemaError
// from `accept` triggers a retry with the reason appended to the prompt.
template <typename T>
T ask_until_parsed(Gateway& gateway, const std::string& prompt, const std::string& purpose,
                   const std::string& relation, const std::function<T(const std::string&)>& accept) {
    std::string attempt_prompt = prompt;
    std::string last_reason;
    for (int attempt = 0; attempt <= kRetries; ++attempt) {
        const std::string reply = gateway.complete(gateway.make_request(attempt_prompt, purpose));
        try {
            return accept(reply);
        } catch (const ParseError& e) {
            last_reason = e.what();
        } catch (const SchemaError& e) {
            last_reason = e.what();
        } catch (const InvariantError& e) {
            last_reason = e.what();
        }
        attempt_prompt = prompt + "\n\nYour previous answer could not be used (" + last_reason +
                         "). Answer again and follow the output format exactly.\n";
    }
    throw SynthesisError("synthesis failed: " + relation + ": " + last_reason);
}

RelationDef parse_definition(const std::string& reply, const std::string& name) {
    const json doc = parse_reply_json(parse_tagged_block(reply, "</new_relationship>"), "relationship definition");
    if (!doc.is_object() || doc.size() != 1 || !doc.contains(name)) {
        throw ParseError("expected a single entry named " + name);
    }
    const json& body = doc.at(name);
    RelationDef def;
    def.name = name;
    def.arity = parse_arity(json_codecs::require_string(body, "type", "/" + name));
    def.definition = json_codecs::require_string(body, "definition", "/" + name);
    switch (def.arity) {
        case Arity::Unary: def.kind = RelationKind::Anchoring; break;
        case Arity::Binary: def.kind = RelationKind::Relative; break;
        case Arity::Nary: def.kind = RelationKind::Alignment; break;
    }
    if (def.kind == RelationKind::Relative) {
        const json& rpc = json_codecs::require(body, "RPC", "/" + name);
        if (!rpc.is_array() || rpc.size() != 3) throw ParseError("RPC must have three components");
        Rpc v{};
        for (std::size_t i = 0; i < 3; ++i) {
            if (!rpc[i].is_number_integer()) throw ParseError("RPC components must be integers");
            v[i] = rpc[i].get<int>();
        }
        def.rpc = v;
    }
    return def;
}

}  // namespace

RelationDef synthesize_relation(const std::string& name, const std::string& context, Gateway& gateway,
                                const RelationLibrary& lib) {
    if (name.empty()) throw InvariantError("relation name is empty");
    if (lib.contains(name)) throw InvariantError("relation already present: " + name);

    const std::string define_prompt = render_template(
        "arl_define", {{"complete_relationship", library_listing(lib)}, {"incomplete_relationship", name}});
    RelationDef def = ask_until_parsed<RelationDef>(
        gateway, define_prompt, "arl_define", name,
        [&](const std::string& reply) { return parse_definition(reply, name); });

    const std::string constraint_prompt = render_template("arl_constraint", {{"relationship_name", name},
                                                                             {"relationship_definition", def.definition},
                                                                             {"spatial_description", context}});
    def = ask_until_parsed<RelationDef>(gateway, constraint_prompt, "arl_constraint", name, [&](const std::string& reply) {
        RelationDef candidate = def;
        candidate.constraint =
            json_codecs::constraint_from_json(parse_reply_json(parse_tagged_block(reply, "</func>"), "constraint"), "/func");
        candidate.check();
        return candidate;
    });

    const std::string validation_prompt = render_template(
        "arl_validation", {{"relationship_name", name},
                           {"relationship_definition", def.definition},
                           {"constraint_spec", json_codecs::constraint_to_json(def.constraint).dump()}});
    def = ask_until_parsed<RelationDef>(gateway, validation_prompt, "arl_validation", name, [&](const std::string& reply) {
        RelationDef candidate = def;
        candidate.validation = json_codecs::validation_from_json(
            parse_reply_json(parse_tagged_block(reply, "</validation>"), "validation"), "/validation");
        candidate.check();
        return candidate;
    });
    return def;
}

}  // namespace layoutforge
