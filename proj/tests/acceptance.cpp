// Prints one PASS/FAIL line per acceptance criterion; exits 1 if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "layoutforge/cli.hpp"
#include "layoutforge/corpus.hpp"
#include "layoutforge/errors.hpp"
#include "layoutforge/grounding.hpp"
#include "layoutforge/layout_io.hpp"
#include "layoutforge/metrics.hpp"
#include "layoutforge/mock_policy.hpp"
#include "layoutforge/validation_loop.hpp"

using namespace layoutforge;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
    bool pass = true;
    std::string detail;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

int run_cli_quiet(std::vector<std::string> args) {
    args.insert(args.begin(), "layoutforge");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

fs::path scratch(const std::string& tag) {
    const fs::path dir = fs::temp_directory_path() / ("layoutforge_acceptance_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

// 1 ---------------------------------------------------------------------------

Outcome psf_reproduction() {
    const auto t0 = Clock::now();
    std::ifstream in(fs::path(LAYOUTFORGE_DATA_DIR) / "table2_avg.csv");
    std::string line;
    std::getline(in, line);
    Outcome o;
    int rows = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        const double cf = std::stod(cells[1]), ib = std::stod(cells[2]), pos = std::stod(cells[3]),
                     ali = std::stod(cells[4]), fc = std::stod(cells[5]), published = std::stod(cells[6]);
        const double got = psf(cf, ib, pos, ali, fc);
        const bool ok = std::abs(got - published) <= 0.05 + 1e-9;
        o.pass = o.pass && ok;
        o.detail += cells[0] + " " + fmt("%.2f", got) + "/" + fmt("%.1f", published) + " ";
        ++rows;
    }
    const double t = seconds_since(t0);
    o.pass = o.pass && rows == 4 && t < 1.0;
    o.detail += "(" + fmt("%.3f", t) + " s)";
    return o;
}

// 2 ---------------------------------------------------------------------------

double oracle_iou(const Aabb& a, const Aabb& b) {
    double inter = 1.0, va = 1.0, vb = 1.0;
    for (int k = 0; k < 3; ++k) {
        inter *= std::max(0.0, std::min(a.max[k], b.max[k]) - std::max(a.min[k], b.min[k]));
        va *= a.max[k] - a.min[k];
        vb *= b.max[k] - b.min[k];
    }
    return inter / (va + vb - inter);
}

bool oracle_inside(const Aabb& x, const Boundary& b) {
    return x.min.x >= b.origin_x && x.max.x <= b.origin_x + b.width && x.min.y >= b.origin_y &&
           x.max.y <= b.origin_y + b.depth && x.min.z >= b.surface_z;
}

Outcome metric_oracles() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(2024);
    // Half-centimetre grid so touching edges and exact containment occur often.
    auto grid = [&](int lo, int hi) { return 0.5 * static_cast<double>(lo + static_cast<int>(rng() % (hi - lo + 1))); };
    const Boundary table;
    int cf_mismatch = 0, ib_mismatch = 0, stacked_layouts = 0;
    for (int t = 0; t < 500; ++t) {
        const int n = 1 + static_cast<int>(rng() % 8);
        Layout layout;
        for (int i = 0; i < n; ++i) {
            const Vec3 size{grid(2, 60), grid(2, 40), grid(2, 10)};
            const double z = (rng() % 3 == 0) ? grid(-2, 12) : 0.0;
            const Vec3 lo{grid(-10, 240), grid(-10, 120), z};
            Pose pose;
            pose.position = lo + size * 0.5;
            layout.place("o" + std::to_string(i), pose, size, {});
        }
        std::vector<Aabb> boxes;
        for (const auto& [_, b] : layout.boxes) boxes.push_back(b);

        std::size_t m = 0, c = 0;
        double iou_sum = 0.0;
        for (std::size_t i = 0; i < boxes.size(); ++i) {
            for (std::size_t j = i + 1; j < boxes.size(); ++j) {
                ++m;
                const double v = oracle_iou(boxes[i], boxes[j]);
                if (v > 0.01) {
                    ++c;
                    iou_sum += v;
                }
            }
        }
        const double cf = m == 0 ? 1.0 : 1.0 - static_cast<double>(c) / static_cast<double>(m);
        const double mean = c == 0 ? 0.0 : iou_sum / static_cast<double>(c);
        const CollisionStats got = collision_free_score(layout, 0.01);
        if (got.cf != cf || got.colliding != c || std::abs(got.mean_iou - mean) > 1e-12) ++cf_mismatch;

        std::size_t v_t = 0, s = 0, v_s = 0;
        for (const auto& b : boxes) v_t += oracle_inside(b, table) ? 0 : 1;
        for (std::size_t i = 0; i < boxes.size(); ++i) {
            for (std::size_t j = i + 1; j < boxes.size(); ++j) {
                const Aabb& a = boxes[i];
                const Aabb& b = boxes[j];
                const bool xy = a.min.x <= b.max.x && b.min.x <= a.max.x && a.min.y <= b.max.y && b.min.y <= a.max.y;
                const bool a_low = a.max.z <= b.min.z;
                const bool b_low = b.max.z <= a.min.z;
                if (!xy || !(a_low || b_low)) continue;
                ++s;
                const Aabb& bottom = a_low ? a : b;
                const Aabb& top = a_low ? b : a;
                const bool held = bottom.min.x <= top.min.x && top.max.x <= bottom.max.x && bottom.min.y <= top.min.y &&
                                  top.max.y <= bottom.max.y;
                if (!held) ++v_s;
            }
        }
        if (s > 0) ++stacked_layouts;
        const double ib = 1.0 - static_cast<double>(v_t + v_s) / static_cast<double>(boxes.size() + s);
        const BoundaryStats gb = in_boundary_score(layout, table);
        if (gb.ib != ib || gb.outside != v_t || gb.stacking_pairs != s || gb.unsupported != v_s) ++ib_mismatch;
    }
    const double t = seconds_since(t0);
    Outcome o;
    o.pass = cf_mismatch == 0 && ib_mismatch == 0 && t < 10.0;
    o.detail = "500 layouts, cf mismatches " + std::to_string(cf_mismatch) + ", ib mismatches " +
               std::to_string(ib_mismatch) + ", layouts with stacks " + std::to_string(stacked_layouts) + " (" +
               fmt("%.3f", t) + " s)";
    return o;
}

// 3 ---------------------------------------------------------------------------

Outcome geometry_properties() {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> pos(-100.0, 100.0);
    std::uniform_real_distribution<double> ext(0.01, 50.0);
    std::uniform_int_distribution<int> ticks(-1 << 17, 1 << 17);
    int sym = 0, ident = 0, disjoint = 0, roundtrip = 0, beyond_ulp = 0;
    const int trials = 20000;
    for (int i = 0; i < trials; ++i) {
        const Vec3 p{pos(rng), pos(rng), pos(rng)};
        const Vec3 q{pos(rng), pos(rng), pos(rng)};
        const Vec3 s{ext(rng), ext(rng), ext(rng)};
        const Vec3 r{ext(rng), ext(rng), ext(rng)};
        const Aabb a = aabb_from_pose({p}, s);
        const Aabb b = aabb_from_pose({q}, r);
        if (std::abs(iou(a, b) - iou(b, a)) > 1e-12) ++sym;
        if (std::abs(iou(a, a) - 1.0) > 1e-12) ++ident;
        const Aabb far{a.min + Vec3{s.x + 1.0, 0, 0}, a.max + Vec3{s.x + 1.0, 0, 0}};
        if (iou(a, far) != 0.0) ++disjoint;
        for (int k = 0; k < 3; ++k) {
            const double scale = std::abs(p[k]) + 0.5 * s[k];
            if (std::abs(a.center()[k] - p[k]) > std::numeric_limits<double>::epsilon() * scale) ++beyond_ulp;
        }
        // Exact recovery holds when pose and size sit on a dyadic grid (1/1024 cm here).
        const Vec3 pd{ticks(rng) / 1024.0, ticks(rng) / 1024.0, ticks(rng) / 1024.0};
        const Vec3 sd{(1 + (ticks(rng) & 0xffff)) / 1024.0, (1 + (ticks(rng) & 0xffff)) / 1024.0, 1.0 / 512.0};
        if (aabb_from_pose({pd}, sd).center() != pd) ++roundtrip;
    }
    const Aabb unit{{0, 0, 0}, {1, 1, 1}};
    const Aabb shifted{{0.5, 0, 0}, {1.5, 1, 1}};
    const double third = iou(unit, shifted);
    Outcome o;
    o.pass = sym == 0 && ident == 0 && disjoint == 0 && roundtrip == 0 && beyond_ulp == 0 &&
             std::abs(third - 1.0 / 3.0) <= 1e-12;
    o.detail = std::to_string(trials) + " random pairs: symmetry " + std::to_string(sym) + ", identity " +
               std::to_string(ident) + ", disjoint " + std::to_string(disjoint) + ", dyadic round-trip " +
               std::to_string(roundtrip) + ", arbitrary round-trip beyond 1 ulp of |p|+h " + std::to_string(beyond_ulp) +
               " failures; offset cube " + fmt("%.15f", third);
    return o;
}

// 4 ---------------------------------------------------------------------------

struct DeskInstance {
    SceneSpec scene;
    TopoRelationSet relations;
    DiscretePoseSet poses;
};

DeskInstance desk_instance() {
    DeskInstance d;
    d.scene.instruction = "desk";
    d.scene.objects = {{"notebook", {30, 21, 2}, "notebook"},
                       {"laptop", {34, 24, 2}, "laptop"},
                       {"cup", {9, 9, 11}, "cup"},
                       {"phone", {8, 15, 1}, "phone"}};
    d.relations.add({"left_of", {"notebook", "laptop"}});
    d.relations.add({"left_of", {"laptop", "cup"}});
    d.relations.add({"aligned_in_x_axis", {"notebook", "laptop", "cup"}});
    d.relations.add({"on_top_of", {"phone", "notebook"}});
    d.poses.anchor = "laptop";
    d.poses.poses = {{"notebook", {-1, 0, 0}}, {"laptop", {0, 0, 0}}, {"cup", {1, 0, 0}}, {"phone", {-1, 0, 1}}};
    return d;
}

Outcome ga_convergence() {
    const DeskInstance d = desk_instance();
    const RelationLibrary lib = builtin_library();
    int full = 0;
    double slowest = 0.0;
    int max_gen = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        GroundingConfig cfg;
        cfg.population = 200;
        cfg.generations = 100;
        cfg.rng_seed = seed;
        const auto t0 = Clock::now();
        const GroundingResult r = ground(d.poses, d.relations, lib, d.scene, cfg);
        slowest = std::max(slowest, seconds_since(t0));
        if (r.evolution.fitness.is_full) {
            ++full;
            max_gen = std::max(max_gen, r.evolution.generations_used);
        }
    }
    GroundingConfig full_size;
    full_size.rng_seed = 1;
    const auto t0 = Clock::now();
    const GroundingResult big = ground(d.poses, d.relations, lib, d.scene, full_size);
    const double big_t = seconds_since(t0);

    Outcome o;
    o.pass = full >= 19 && slowest < 30.0 && big_t < 300.0;
    o.detail = std::to_string(full) + "/20 seeds full at population 200 (latest generation " + std::to_string(max_gen) +
               ", slowest run " + fmt("%.2f", slowest) + " s); 2000 x 100 run " + fmt("%.2f", big_t) + " s, " +
               (big.evolution.fitness.is_full ? "full" : "not full") + " at generation " +
               std::to_string(big.evolution.generations_used);
    return o;
}

// 5 ---------------------------------------------------------------------------

Outcome replay_determinism() {
    const fs::path dir = scratch("determinism");
    const std::string cassette = (fs::path(LAYOUTFORGE_FIXTURE_DIR) / "Dining_Table_0.cassette.jsonl").string();
    const int a = run_cli_quiet({"generate", "Dining_Table", "0", "--mode", "replay", "--cassette", cassette, "--seed",
                                 "7", "--out", (dir / "a").string()});
    const int b = run_cli_quiet({"generate", "Dining_Table", "0", "--mode", "replay", "--cassette", cassette, "--seed",
                                 "7", "--out", (dir / "b").string()});
    const bool layout_same = slurp(dir / "a" / "layout.json") == slurp(dir / "b" / "layout.json");
    const bool svg_same = slurp(dir / "a" / "layout.svg") == slurp(dir / "b" / "layout.svg");
    Outcome o;
    o.pass = a == 0 && b == 0 && layout_same && svg_same && !slurp(dir / "a" / "layout.json").empty();
    o.detail = "exit codes " + std::to_string(a) + "/" + std::to_string(b) + ", layout.json " +
               (layout_same ? "identical" : "differs") + ", layout.svg " + (svg_same ? "identical" : "differs");
    return o;
}

// 6 ---------------------------------------------------------------------------

Outcome closed_loop_fixtures() {
    const fs::path dir = scratch("fixtures");
    Outcome o;
    int good = 0;
    for (const auto& sc : bundled_corpus()) {
        const std::string cassette = (fs::path(LAYOUTFORGE_FIXTURE_DIR) / (sc.key + "_0.cassette.jsonl")).string();
        const fs::path out = dir / sc.key;
        const int code = run_cli_quiet(
            {"generate", sc.key, "0", "--mode", "replay", "--cassette", cassette, "--seed", "7", "--out", out.string()});
        bool ok = false;
        std::string why = "exit " + std::to_string(code);
        try {
            const StoredReport rep = report_from_json(read_text_file(out / "report.json"));
            const MetricsReport m = metrics_from_json(read_text_file(out / "metrics.json"));
            ok = code == 0 && rep.solved && rep.rounds_used >= 1 && rep.rounds_used <= 5 && m.cf == 100.0 &&
                 m.ib == 100.0 && m.fc == 100.0;
            why = "rounds " + std::to_string(rep.rounds_used) + " CF " + fmt("%.1f", m.cf) + " IB " + fmt("%.1f", m.ib) +
                  " FC " + fmt("%.1f", m.fc);
        } catch (const Error& e) {
            why += std::string(", ") + e.what();
        }
        if (ok) {
            ++good;
        } else {
            o.detail += sc.key + " (" + why + ") ";
        }
    }
    o.pass = good == 8;
    o.detail = std::to_string(good) + "/8 scenarios solved with CF = IB = FC = 100.0" +
               (o.detail.empty() ? "" : "; failing: " + o.detail);
    return o;
}

// 7 ---------------------------------------------------------------------------

Outcome filter_oracle() {
    const RelationLibrary lib = builtin_library();
    const std::vector<std::string> objects = {"o", "a", "b"};
    int checked = 0, disagreements = 0, relations = 0;
    for (const auto& [name, entry] : lib.entries()) {
        if (entry.def.kind != RelationKind::Relative) continue;
        ++relations;
        const Rpc v = *entry.def.rpc;
        TopoRelationSet r;
        r.add({name, {"a", "b"}});
        for (int i = 0; i < 125 * 125; ++i) {
            LatticePoint pa{}, pb{};
            int k = i;
            for (int axis = 0; axis < 3; ++axis, k /= 5) pa[axis] = k % 5 - 2;
            for (int axis = 0; axis < 3; ++axis, k /= 5) pb[axis] = k % 5 - 2;
            // Every axis named by the rpc must show the same strict sign.
            bool expect = true;
            for (int axis = 0; axis < 3; ++axis) {
                const int d = pa[axis] - pb[axis];
                if (v[axis] > 0 && !(d > 0)) expect = false;
                if (v[axis] < 0 && !(d < 0)) expect = false;
            }
            DiscretePoseSet c;
            c.anchor = "o";
            c.poses = {{"o", {0, 0, 0}}, {"a", pa}, {"b", pb}};
            const bool direct = discrete_check({name, {"a", "b"}}, c, lib);
            const FilterResult f = consistency_filter(c, r, lib, objects);
            const bool kept = f.relations.relations.size() == 1;
            const bool incomplete_ok = kept ? f.incomplete.empty() : f.incomplete == std::set<std::string>{"a", "b"};
            if (direct != expect || kept != expect || !incomplete_ok) ++disagreements;
            ++checked;
        }
    }
    Outcome o;
    o.pass = disagreements == 0 && relations > 0;
    o.detail = std::to_string(relations) + " relative relations x 15625 pose pairs = " + std::to_string(checked) +
               " cases, " + std::to_string(disagreements) + " disagreements";
    return o;
}

// 8 ---------------------------------------------------------------------------

Outcome arl_conservativeness() {
    const RelationLibrary lib = builtin_library();
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    int tightened = 0, budget = 0, monotone = 0, samples = 0;
    for (const auto& [name, entry] : lib.entries()) {
        for (int trial = 0; trial < 50; ++trial) {
            RelationDef def = entry.def;
            def.constraint.max_gap_frac = 0.02 + 0.2 * unit(rng);
            def.validation.tolerance_frac = 1.0 + 2.0 * unit(rng);
            for (int step = 0; step < def.validation.max_adjustments; ++step) {
                const FailureKind kind = (rng() & 1u) ? FailureKind::GapOverflow : FailureKind::OverlapShortfall;
                const RelationDef next = adjust_parameters(def, {kind, ""});
                if (next.constraint.max_gap_frac < def.constraint.max_gap_frac ||
                    next.validation.tolerance_frac < def.validation.tolerance_frac ||
                    next.constraint.min_gap_frac != def.constraint.min_gap_frac || next.revision != def.revision + 1) {
                    ++tightened;
                }
                def = next;
            }
            try {
                adjust_parameters(def, {FailureKind::GapOverflow, ""});
                ++budget;
            } catch (const AdjustmentLimitError&) {
            }
        }
    }
    std::uniform_real_distribution<double> px(0.0, 560.0);
    std::uniform_real_distribution<double> size(4.0, 120.0);
    for (int t = 0; t < 2000; ++t) {
        const double ax = px(rng), ay = px(rng) / 2, bx = px(rng), by = px(rng) / 2;
        const double az = (rng() % 4 == 0) ? 3.0 : 0.0;
        const Aabb boxes[3] = {{{ax, ay, az}, {ax + size(rng), ay + size(rng) / 2, az + 5}},
                               {{bx, by, 0}, {bx + size(rng), by + size(rng) / 2, 3}},
                               {{by, bx / 2, 0}, {by + size(rng), bx / 2 + size(rng) / 2, 3}}};
        for (const auto& [name, entry] : lib.entries()) {
            const std::size_t n = entry.def.arity == Arity::Unary ? 1 : (entry.def.arity == Arity::Binary ? 2 : 3);
            bool prev = false;
            for (double tol = 1.0; tol <= 5.0; tol += 0.125) {
                const bool ok = validate_with_tolerance(entry.def, std::span<const Aabb>(boxes, n), 600, 300, tol);
                if (prev && !ok) ++monotone;
                prev = ok;
                ++samples;
            }
        }
    }
    Outcome o;
    o.pass = tightened == 0 && budget == 0 && monotone == 0;
    o.detail = "tightening steps " + std::to_string(tightened) + ", budget overruns " + std::to_string(budget) +
               ", widening flips " + std::to_string(monotone) + " over " + std::to_string(samples) + " validations";
    return o;
}

// 9 ---------------------------------------------------------------------------

Outcome fallback_completeness() {
    const SceneSpec scene =
        make_scene(find_scenario(bundled_corpus(), "Dining_Table"), 0, SizeCatalog::bundled(), 7);
    Gateway gateway(GatewayMode::Mock, std::make_unique<ScriptedProvider>("omit:napkin"));
    GroundingConfig cfg;
    cfg.rng_seed = 7;
    const RunReport rep = run_closed_loop(scene, builtin_library(), gateway, LoopConfig{}, cfg);
    bool forced = false;
    for (const auto& round : rep.rounds) {
        forced = forced || std::find(round.forced.begin(), round.forced.end(), "napkin") != round.forced.end();
    }
    Outcome o;
    o.pass = rep.final_layout.contains("napkin") && forced && rep.metrics.fc == 100.0;
    o.detail = std::string("napkin ") + (rep.final_layout.contains("napkin") ? "placed" : "missing") + ", " +
               (forced ? "by the fallback rule" : "not by the fallback rule") + ", FC " + fmt("%.1f", rep.metrics.fc) +
               ", solved " + (rep.solved ? "yes" : "no") + " in " + std::to_string(rep.rounds_used) + " round(s)";
    return o;
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"psf reproduction", psf_reproduction},
        {"metric oracle identity", metric_oracles},
        {"geometry properties", geometry_properties},
        {"ga convergence", ga_convergence},
        {"replay determinism", replay_determinism},
        {"closed-loop fixtures", closed_loop_fixtures},
        {"consistency-filter oracle", filter_oracle},
        {"arl conservativeness", arl_conservativeness},
        {"fallback completeness", fallback_completeness},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("threw: ") + e.what();
        }
        if (!o.pass) ++failed;
        std::printf("%s criterion %zu (%s): %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                    o.detail.c_str());
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
