#include "layoutforge/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include "layoutforge/corpus.hpp"
#include "layoutforge/errors.hpp"
#include "layoutforge/grounding.hpp"
#include "layoutforge/layout_io.hpp"
#include "layoutforge/llm.hpp"
#include "layoutforge/metrics.hpp"
#include "layoutforge/mock_policy.hpp"
#include "layoutforge/relations.hpp"
#include "layoutforge/svg.hpp"
#include "layoutforge/validation_loop.hpp"

namespace layoutforge {

namespace {

namespace fs = std::filesystem;

class UsageError : public Error {
  public:
    using Error::Error;
};

const std::map<std::string, std::string>& setting_defaults() {
    static const std::map<std::string, std::string> defaults{
        {"mode", "mock"},      {"cassette", ""},     {"seed", "0"},          {"out", ""},
        {"tau", "0.01"},       {"policy", "arranger"}, {"provider", ""},     {"model", "gpt-4o"},
        {"endpoint", HttpProviderConfig{}.endpoint},   {"population", "2000"}, {"generations", "100"},
        {"threads", "1"},      {"max_rounds", "5"},  {"regrounds", "2"},     {"corpus", ""},
        {"sizes", ""},         {"library", ""},      {"judge_pos", "75"},    {"judge_ali", "70"}};
    return defaults;
}

std::string env_name(const std::string& key) {
    std::string out = "LAYOUTFORGE_";
    for (char c : key) out += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return out;
}

// `key = value` lines; '#' starts a comment.
std::map<std::string, std::string> parse_config_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file " + path.string());
    std::map<std::string, std::string> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw UsageError(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
        }
        std::string key = trim(line.substr(0, eq));
        std::replace(key.begin(), key.end(), '-', '_');
        if (!setting_defaults().count(key)) {
            throw UsageError(path.string() + ":" + std::to_string(lineno) + ": unknown setting " + key);
        }
        std::string value = trim(line.substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
        out[key] = value;
    }
    return out;
}

// Flags over environment over config file over defaults.
class Settings {
  public:
    std::map<std::string, std::string> flags;
    std::string config_path;

    void resolve() {
        values_ = setting_defaults();
        std::string cfg = config_path;
        if (cfg.empty()) {
            if (const char* v = std::getenv("LAYOUTFORGE_CONFIG")) cfg = v;
        }
        if (!cfg.empty()) {
            for (const auto& [k, v] : parse_config_file(cfg)) values_[k] = v;
        }
        for (auto& [k, v] : values_) {
            if (const char* e = std::getenv(env_name(k).c_str())) v = e;
        }
        for (const auto& [k, v] : flags) values_[k] = v;
    }

    const std::string& str(const std::string& key) const { return values_.at(key); }

    long long integer(const std::string& key) const {
        const std::string& v = str(key);
        try {
            std::size_t used = 0;
            const long long n = std::stoll(v, &used);
            if (used == v.size()) return n;
        } catch (const std::exception&) {
        }
        throw UsageError("invalid integer for " + key + ": " + v);
    }

    double real(const std::string& key) const {
        const std::string& v = str(key);
        try {
            std::size_t used = 0;
            const double d = std::stod(v, &used);
            if (used == v.size()) return d;
        } catch (const std::exception&) {
        }
        throw UsageError("invalid number for " + key + ": " + v);
    }

  private:
    std::map<std::string, std::string> values_;
};

struct FlagBinding {
    std::string key;
    std::string value;
    CLI::Option* option = nullptr;
};

class FlagSet {
  public:
    void add(CLI::App* app, const std::string& key, const std::string& help) {
        auto binding = std::make_unique<FlagBinding>();
        std::string flag = "--" + key;
        std::replace(flag.begin(), flag.end(), '_', '-');
        binding->key = key;
        binding->option = app->add_option(flag, binding->value, help);
        bindings_.push_back(std::move(binding));
    }

    void collect(Settings& s) const {
        for (const auto& b : bindings_) {
            if (b->option->count() > 0) s.flags[b->key] = b->value;
        }
    }

  private:
    std::vector<std::unique_ptr<FlagBinding>> bindings_;
};

std::string fmt1(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", v);
    return buf;
}

std::vector<CorpusScenario> corpus_from(const Settings& s) {
    return s.str("corpus").empty() ? bundled_corpus() : load_corpus(s.str("corpus"));
}

SizeCatalog catalog_from(const Settings& s) {
    return s.str("sizes").empty() ? SizeCatalog::bundled() : SizeCatalog::load(s.str("sizes"));
}

std::unique_ptr<Gateway> make_gateway(const Settings& s, const SizeCatalog& catalog) {
    GatewayMode mode;
    try {
        mode = parse_gateway_mode(s.str("mode"));
    } catch (const Error&) {
        throw UsageError("unknown mode: " + s.str("mode") + " (expected live, record, replay or mock)");
    }
    const std::string cassette = s.str("cassette");
    if ((mode == GatewayMode::Replay || mode == GatewayMode::Record) && cassette.empty()) {
        throw UsageError("--mode " + s.str("mode") + " needs --cassette PATH");
    }
    if (mode == GatewayMode::Replay && !fs::exists(cassette)) throw UsageError("cassette not found: " + cassette);

    std::unique_ptr<Provider> provider;
    if (mode != GatewayMode::Replay) {
        std::string kind = s.str("provider");
        if (kind.empty()) kind = mode == GatewayMode::Mock ? "mock" : "http";
        if (kind == "mock") {
            provider = std::make_unique<ScriptedProvider>(s.str("policy"), static_cast<int>(s.integer("judge_pos")),
                                                          static_cast<int>(s.integer("judge_ali")), catalog);
        } else if (kind == "http") {
            HttpProviderConfig cfg;
            cfg.endpoint = s.str("endpoint");
            provider = std::make_unique<HttpProvider>(cfg);
        } else {
            throw UsageError("unknown provider: " + kind + " (expected http or mock)");
        }
    }
    auto gateway = std::make_unique<Gateway>(mode, std::move(provider), mode == GatewayMode::Mock ? fs::path{} : fs::path{cassette});
    gateway->set_model_id(s.str("model"));
    return gateway;
}

std::string cassette_text(const Gateway& gateway) {
    std::string out;
    for (const auto& e : gateway.entries_used()) out += Cassette::to_line(e) + "\n";
    return out;
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

int cmd_generate(const Settings& s, const std::string& key, int case_index, bool judge, const std::string& save_library,
                 std::ostream& out, std::ostream& err) {
    const fs::path dir = s.str("out").empty() ? fs::path("runs") / (key + "_" + std::to_string(case_index)) : fs::path(s.str("out"));
    std::optional<RunMeta> meta;
    try {
        const auto corpus = corpus_from(s);
        const SizeCatalog catalog = catalog_from(s);
        const CorpusScenario& scenario = find_scenario(corpus, key);
        if (case_index < 0 || static_cast<std::size_t>(case_index) >= scenario.cases.size()) {
            throw UsageError("case index out of range for " + key + ": " + std::to_string(case_index));
        }
        const auto seed = static_cast<std::uint64_t>(s.integer("seed"));
        const SceneSpec scene = make_scene(scenario, static_cast<std::size_t>(case_index), catalog, seed);
        meta = RunMeta{key, case_index, seed, s.str("mode"), scenario.cases[static_cast<std::size_t>(case_index)], scene.boundary};

        auto gateway = make_gateway(s, catalog);
        const RelationLibrary lib = s.str("library").empty() ? builtin_library() : load_library(s.str("library"));

        LoopConfig loop_cfg;
        loop_cfg.max_rounds = static_cast<int>(s.integer("max_rounds"));
        loop_cfg.regrounds_per_round = static_cast<int>(s.integer("regrounds"));
        GroundingConfig ground_cfg;
        ground_cfg.population = static_cast<int>(s.integer("population"));
        ground_cfg.generations = static_cast<int>(s.integer("generations"));
        ground_cfg.threads = static_cast<int>(s.integer("threads"));
        ground_cfg.rng_seed = seed;

        RunReport report = run_closed_loop(scene, lib, *gateway, loop_cfg, ground_cfg);
        const double tau = s.real("tau");
        report.metrics = evaluate_layout(report.final_layout, scene.boundary, meta->objects, tau);
        const std::string svg = render_svg(report.final_layout, scene.boundary);
        if (judge && report.error.empty()) {
            attach_semantic(report.metrics, semantic_scores_llm(svg, scene.instruction, *gateway));
            report.fingerprints = gateway->fingerprints_used();
        }

        write_text_file(dir / "layout.json", layout_to_json(report.final_layout));
        write_text_file(dir / "metrics.json", metrics_to_json(report.metrics));
        write_text_file(dir / "layout.svg", svg);
        write_text_file(dir / "run.cassette.jsonl", cassette_text(*gateway));
        write_text_file(dir / "report.json", report_to_json(report, *meta));
        if (!save_library.empty()) layoutforge::save_library(report.library, save_library);

        out << key << " case " << case_index << ": " << (report.solved ? "solved" : "unsolved") << " in "
            << report.rounds_used << " round(s); CF " << fmt1(report.metrics.cf) << " IB " << fmt1(report.metrics.ib)
            << " FC " << fmt1(report.metrics.fc);
        if (report.metrics.psf) out << " PSF " << fmt1(*report.metrics.psf);
        out << "; artifacts in " << dir.string() << "\n";
        if (!report.error.empty()) {
            err << "error: " << report.error << "\n";
            return 1;
        }
        return report.solved ? 0 : 2;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        try {
            write_text_file(dir / "report.json", error_report_json(e.what(), meta));
        } catch (const std::exception& io) {
            err << "error: " << io.what() << "\n";
        }
        return 1;
    }
}

struct SceneFlags {
    std::string scenario;
    int case_index = 0;
    std::string objects;
    double width = 0.0;
    double depth = 0.0;
    std::string instruction;
};

// Boundary, requested names and instruction implied by the scene flags.
struct SceneContext {
    Boundary boundary;
    std::vector<std::string> requested;
    std::string instruction;
};

SceneContext scene_context(const Settings& s, const SceneFlags& f, const Layout& layout) {
    SceneContext ctx;
    const SizeCatalog catalog = catalog_from(s);
    ctx.boundary = catalog.table_for(f.scenario);
    if (!f.scenario.empty()) {
        const auto corpus = corpus_from(s);
        const CorpusScenario& sc = find_scenario(corpus, f.scenario);
        if (f.case_index < 0 || static_cast<std::size_t>(f.case_index) >= sc.cases.size()) {
            throw UsageError("case index out of range for " + f.scenario + ": " + std::to_string(f.case_index));
        }
        ctx.requested = sc.cases[static_cast<std::size_t>(f.case_index)];
        ctx.instruction = sc.info;
    }
    if (!f.objects.empty()) ctx.requested = split_list(f.objects);
    if (ctx.requested.empty()) {
        for (const auto& [name, _] : layout.poses) ctx.requested.push_back(name);
    }
    if (f.width > 0.0) ctx.boundary.width = f.width;
    if (f.depth > 0.0) ctx.boundary.depth = f.depth;
    if (!f.instruction.empty()) ctx.instruction = f.instruction;
    return ctx;
}

int cmd_evaluate(const Settings& s, const std::string& layout_path, const SceneFlags& f, bool judge,
                 std::ostream& out, std::ostream& err) {
    try {
        const Layout layout = layout_from_json(read_text_file(layout_path), layout_path);
        const SceneContext ctx = scene_context(s, f, layout);
        if (ctx.requested.empty()) throw UsageError("nothing to evaluate: the layout is empty and no objects were given");
        MetricsReport m = evaluate_layout(layout, ctx.boundary, ctx.requested, s.real("tau"));
        if (judge) {
            if (ctx.instruction.empty()) throw UsageError("--judge needs --scenario or --instruction");
            auto gateway = make_gateway(s, catalog_from(s));
            attach_semantic(m, semantic_scores_llm(render_svg(layout, ctx.boundary), ctx.instruction, *gateway));
        }
        const std::string text = metrics_to_json(m);
        if (s.str("out").empty()) {
            out << text;
        } else {
            write_text_file(s.str("out"), text);
            out << "CF " << fmt1(m.cf) << " IB " << fmt1(m.ib) << " FC " << fmt1(m.fc) << "\n";
        }
        return 0;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

int cmd_render(const Settings& s, const std::string& layout_path, const SceneFlags& f, std::ostream& out,
               std::ostream& err) {
    try {
        const Layout layout = layout_from_json(read_text_file(layout_path), layout_path);
        const SceneContext ctx = scene_context(s, f, layout);
        const std::string svg = render_svg(layout, ctx.boundary);
        if (s.str("out").empty()) {
            out << svg;
        } else {
            write_text_file(s.str("out"), svg);
        }
        return 0;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
    return cells;
}

int psf_check(const std::string& csv_path, std::ostream& out, std::ostream& err) {
    try {
        std::istringstream in(read_text_file(csv_path));
        std::string line;
        if (!std::getline(in, line)) throw SchemaError(csv_path + ": empty file");
        const auto header = split_csv_line(line);
        const std::vector<std::string> want{"method", "CF", "IB", "Pos", "Ali", "FC", "PSF"};
        std::map<std::string, std::size_t> col;
        for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
        for (const auto& w : want) {
            if (!col.count(w)) throw SchemaError(csv_path + ": missing column " + w);
        }
        bool all_ok = true;
        int rows = 0;
        out << "method        computed  published  ok\n";
        while (std::getline(in, line)) {
            if (trim(line).empty()) continue;
            const auto cells = split_csv_line(line);
            if (cells.size() != header.size()) throw SchemaError(csv_path + ": ragged row: " + line);
            auto value = [&](const std::string& c) {
                try {
                    return std::stod(cells[col.at(c)]);
                } catch (const std::exception&) {
                    throw SchemaError(csv_path + ": not a number in column " + c + ": " + cells[col.at(c)]);
                }
            };
            const double computed = psf(value("CF"), value("IB"), value("Pos"), value("Ali"), value("FC"));
            const double published = value("PSF");
            // Published values carry one decimal, so a half-unit of the last place is the honest bound.
            const bool ok = std::abs(computed - published) <= 0.05 + 1e-9;
            all_ok = all_ok && ok;
            ++rows;
            char buf[128];
            std::snprintf(buf, sizeof buf, "%-12s  %8.2f  %9.1f  %s\n", cells[col.at("method")].c_str(), computed,
                          published, ok ? "yes" : "NO");
            out << buf;
        }
        if (rows == 0) throw SchemaError(csv_path + ": no rows");
        return all_ok ? 0 : 2;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

struct BenchRow {
    double cf = 0, ib = 0, fc = 0, pos = 0, ali = 0;
    int runs = 0;
    int judged = 0;
};

int cmd_bench(const Settings& s, const std::string& dir, const std::string& csv_out, std::ostream& out,
              std::ostream& err) {
    try {
        if (dir.empty()) throw UsageError("bench needs a layout directory or --psf-check CSV");
        if (!fs::is_directory(dir)) throw UsageError("not a directory: " + dir);
        std::vector<fs::path> layouts;
        for (const auto& entry : fs::recursive_directory_iterator(dir)) {
            if (entry.is_regular_file() && entry.path().filename() == "layout.json") layouts.push_back(entry.path());
        }
        std::sort(layouts.begin(), layouts.end());
        if (layouts.empty()) throw UsageError("no layout.json files under " + dir);

        const SizeCatalog catalog = catalog_from(s);
        std::map<std::string, BenchRow> rows;
        std::vector<std::string> order;
        for (const auto& path : layouts) {
            const Layout layout = layout_from_json(read_text_file(path), path.string());
            std::string scenario = fs::relative(path, dir).begin()->string();
            if (scenario == "layout.json") scenario = fs::path(dir).filename().string();
            std::vector<std::string> requested;
            Boundary boundary = catalog.table_for(scenario);
            const fs::path report_path = path.parent_path() / "report.json";
            if (fs::exists(report_path)) {
                const StoredReport stored = report_from_json(read_text_file(report_path), report_path.string());
                if (stored.meta) {
                    scenario = stored.meta->scenario;
                    requested = stored.meta->objects;
                    boundary = stored.meta->boundary;
                }
            }
            if (requested.empty()) {
                for (const auto& [name, _] : layout.poses) requested.push_back(name);
            }
            if (requested.empty()) throw SchemaError(path.string() + ": empty layout");
            const MetricsReport m = evaluate_layout(layout, boundary, requested, s.real("tau"));
            if (!rows.count(scenario)) order.push_back(scenario);
            BenchRow& row = rows[scenario];
            row.cf += m.cf;
            row.ib += m.ib;
            row.fc += m.fc;
            ++row.runs;
            const fs::path metrics_path = path.parent_path() / "metrics.json";
            if (fs::exists(metrics_path)) {
                const MetricsReport stored = metrics_from_json(read_text_file(metrics_path), metrics_path.string());
                if (stored.pos && stored.ali) {
                    row.pos += *stored.pos;
                    row.ali += *stored.ali;
                    ++row.judged;
                }
            }
        }

        std::string table = "Scenario            CF      IB      Pos.    Ali.    FC      PSF\n";
        std::string csv = "scenario,CF,IB,Pos,Ali,FC,PSF\n";
        BenchRow avg;
        int judged_rows = 0;
        auto emit = [&](const std::string& name, double cf, double ib, std::optional<double> pos, std::optional<double> ali,
                        double fc) {
            std::optional<double> p;
            if (pos && ali) p = psf(cf, ib, *pos, *ali, fc);
            auto cell = [](const std::optional<double>& v) { return v.has_value() ? fmt1(v.value()) : std::string("-"); };
            char buf[160];
            std::snprintf(buf, sizeof buf, "%-18s  %-6s  %-6s  %-6s  %-6s  %-6s  %s\n", name.c_str(), fmt1(cf).c_str(),
                          fmt1(ib).c_str(), cell(pos).c_str(), cell(ali).c_str(), fmt1(fc).c_str(), cell(p).c_str());
            table += buf;
            csv += name + "," + fmt1(cf) + "," + fmt1(ib) + "," + cell(pos) + "," + cell(ali) + "," + fmt1(fc) + "," +
                   cell(p) + "\n";
        };
        for (const auto& name : order) {
            const BenchRow& r = rows.at(name);
            const double n = r.runs;
            std::optional<double> pos, ali;
            if (r.judged == r.runs) {
                pos = r.pos / n;
                ali = r.ali / n;
                avg.pos += *pos;
                avg.ali += *ali;
                ++judged_rows;
            }
            emit(name, r.cf / n, r.ib / n, pos, ali, r.fc / n);
            avg.cf += r.cf / n;
            avg.ib += r.ib / n;
            avg.fc += r.fc / n;
        }
        const double k = static_cast<double>(order.size());
        const bool all_judged = judged_rows == static_cast<int>(order.size());
        emit("Average", avg.cf / k, avg.ib / k, all_judged ? std::optional<double>(avg.pos / k) : std::nullopt,
             all_judged ? std::optional<double>(avg.ali / k) : std::nullopt, avg.fc / k);
        out << table;
        if (!csv_out.empty()) write_text_file(csv_out, csv);
        return 0;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"layoutforge: tabletop layout generation with relation-guided search"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "layoutforge 0.1.0");

    Settings settings;
    std::string config;
    bool judge = false;

    auto add_gateway_flags = [](CLI::App* cmd, FlagSet& flags) {
        flags.add(cmd, "mode", "Gateway mode: live, record, replay or mock");
        flags.add(cmd, "cassette", "Cassette JSONL file for record and replay");
        flags.add(cmd, "provider", "Provider behind live/record/mock: http or mock");
        flags.add(cmd, "policy", "Scripted provider policy");
        flags.add(cmd, "model", "Model id sent to the provider");
        flags.add(cmd, "endpoint", "Chat-completion endpoint URL");
        flags.add(cmd, "judge_pos", "Pos. score returned by the scripted judge");
        flags.add(cmd, "judge_ali", "Ali. score returned by the scripted judge");
    };
    auto add_data_flags = [](CLI::App* cmd, FlagSet& flags) {
        flags.add(cmd, "corpus", "Corpus JSON (default: bundled)");
        flags.add(cmd, "sizes", "Size catalog JSON (default: bundled)");
    };

    FlagSet gen_flags;
    std::string gen_key;
    int gen_case = 0;
    std::string save_library_path;
    CLI::App* gen = app.add_subcommand("generate", "Run the closed loop for one corpus case and write artifacts");
    gen->add_option("scenario", gen_key, "Scenario key, e.g. Dining_Table")->required();
    gen->add_option("case", gen_case, "Case index within the scenario")->required();
    gen->add_option("--config", config, "Settings file with key = value lines");
    gen->add_flag("--judge", judge, "Score Pos./Ali. with the judge prompt");
    gen->add_option("--save-library", save_library_path, "Write the run's adjusted relation library here");
    add_gateway_flags(gen, gen_flags);
    add_data_flags(gen, gen_flags);
    gen_flags.add(gen, "seed", "Random seed");
    gen_flags.add(gen, "out", "Output directory");
    gen_flags.add(gen, "tau", "IoU threshold for collisions");
    gen_flags.add(gen, "population", "Genetic population size");
    gen_flags.add(gen, "generations", "Generation limit");
    gen_flags.add(gen, "threads", "Fitness evaluation threads");
    gen_flags.add(gen, "max_rounds", "Stage-1 samplings before giving up");
    gen_flags.add(gen, "regrounds", "Re-groundings per round");
    gen_flags.add(gen, "library", "Relation library JSON (default: builtin)");

    SceneFlags scene_flags;
    auto add_scene_flags = [&scene_flags](CLI::App* cmd) {
        cmd->add_option("--scenario", scene_flags.scenario, "Scenario key supplying table, objects and instruction");
        cmd->add_option("--case", scene_flags.case_index, "Case index within the scenario");
        cmd->add_option("--objects", scene_flags.objects, "Comma-separated requested object names");
        cmd->add_option("--width", scene_flags.width, "Surface width in cm");
        cmd->add_option("--depth", scene_flags.depth, "Surface depth in cm");
    };

    FlagSet eval_flags;
    std::string eval_layout;
    CLI::App* eval = app.add_subcommand("evaluate", "Compute CF, IB and FC (and optionally Pos./Ali./PSF) for a layout");
    eval->add_option("layout", eval_layout, "layout.json")->required();
    eval->add_option("--config", config, "Settings file with key = value lines");
    eval->add_option("--instruction", scene_flags.instruction, "Task instruction for the judge");
    eval->add_flag("--judge", judge, "Score Pos./Ali. with the judge prompt");
    add_scene_flags(eval);
    add_gateway_flags(eval, eval_flags);
    add_data_flags(eval, eval_flags);
    eval_flags.add(eval, "tau", "IoU threshold for collisions");
    eval_flags.add(eval, "out", "Write metrics.json here instead of stdout");

    FlagSet render_flags;
    std::string render_layout;
    CLI::App* render = app.add_subcommand("render", "Draw a top-down SVG schematic of a layout");
    render->add_option("layout", render_layout, "layout.json")->required();
    render->add_option("--config", config, "Settings file with key = value lines");
    add_scene_flags(render);
    add_data_flags(render, render_flags);
    render_flags.add(render, "out", "Write the SVG here instead of stdout");

    FlagSet bench_flags;
    std::string bench_dir;
    std::string bench_csv;
    std::string psf_csv;
    CLI::App* bench = app.add_subcommand("bench", "Tabulate metrics over a directory of runs, or check PSF arithmetic");
    bench->add_option("dir", bench_dir, "Directory of runs, one subdirectory per scenario");
    bench->add_option("--config", config, "Settings file with key = value lines");
    bench->add_option("--psf-check", psf_csv, "CSV of published components and PSF to verify");
    bench->add_option("--csv", bench_csv, "Also write the table as CSV");
    add_data_flags(bench, bench_flags);
    bench_flags.add(bench, "tau", "IoU threshold for collisions");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::CallForVersion&) {
        out << "layoutforge 0.1.0\n";
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n";
        for (CLI::App* sub : app.get_subcommands()) err << sub->help();
        return 1;
    }

    settings.config_path = config;
    try {
        if (gen->parsed()) {
            gen_flags.collect(settings);
            settings.resolve();
        } else if (eval->parsed()) {
            eval_flags.collect(settings);
            settings.resolve();
        } else if (render->parsed()) {
            render_flags.collect(settings);
            settings.resolve();
        } else {
            bench_flags.collect(settings);
            settings.resolve();
        }
    } catch (const Error& e) {
        err << "usage error: " << e.what() << "\n";
        return 1;
    }

    if (gen->parsed()) return cmd_generate(settings, gen_key, gen_case, judge, save_library_path, out, err);
    if (eval->parsed()) return cmd_evaluate(settings, eval_layout, scene_flags, judge, out, err);
    if (render->parsed()) return cmd_render(settings, render_layout, scene_flags, out, err);
    if (!psf_csv.empty()) return psf_check(psf_csv, out, err);
    return cmd_bench(settings, bench_dir, bench_csv, out, err);
}

}  // namespace layoutforge
