#include <doctest.h>

#include <random>

#include "layoutforge/corpus.hpp"
#include "layoutforge/errors.hpp"
#include "layoutforge/fast_system.hpp"
#include "layoutforge/validation_loop.hpp"
#include "test_support.hpp"

using namespace layoutforge;

namespace {

SceneSpec dining_scene() {
    return make_scene(find_scenario(bundled_corpus(), "Dining_Table"), 0, SizeCatalog::bundled(), 7);
}

DiscretePoseSet poses_of(std::map<std::string, LatticePoint> poses, std::string anchor) {
    DiscretePoseSet c;
    c.poses = std::move(poses);
    c.anchor = std::move(anchor);
    return c;
}

bool involves(const RelationInstance& r, const std::string& name) {
    return std::find(r.args.begin(), r.args.end(), name) != r.args.end();
}

}  // namespace

TEST_SUITE("fast_system") {
    TEST_CASE("parse_pose_block") {
        const PoseBlock b = parse_pose_block("notebook: [0, 0, 0]\npen: [1, 0, 0]", {"notebook", "pen", "cup"});
        CHECK(b.poses.anchor == "notebook");
        CHECK(b.poses.at("pen") == LatticePoint{1, 0, 0});
        CHECK(b.poses.scale == 1);
        CHECK(b.missing == std::vector<std::string>{"cup"});

        const PoseBlock half =
            parse_pose_block("plate: [0, 0, 0]\nspoon: [0.5, 0, 0]\nknife: [1, 0, 0]\nghost: [3, 0, 0]",
                             {"plate", "spoon", "knife"});
        CHECK(half.poses.scale == 2);
        CHECK(half.poses.at("spoon") == LatticePoint{1, 0, 0});
        CHECK(half.poses.at("knife") == LatticePoint{2, 0, 0});
        CHECK(half.poses.at("plate") == LatticePoint{0, 0, 0});
        CHECK(half.ignored == std::vector<std::string>{"ghost"});

        CHECK_THROWS_AS(parse_pose_block("pen: [1, 0]", {"pen"}), ParseError);
        try {
            parse_pose_block("pen: [1, 0, 0]", {"pen"});
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(std::string(e.what()) == "no anchor");
        }
        try {
            parse_pose_block("notebook: [0, 0, 0]\npen at one", {"notebook", "pen"});
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(std::string(e.what()).find("pen at one") != std::string::npos);
        }
    }

    TEST_CASE("parse_relation_lines") {
        const auto rs = parse_relation_lines(
            "left_of('pencil', 'notebook')\ncentral_column('notebook')\n"
            "aligned_in_x_axis(\"a\",  'b' , 'c')");
        REQUIRE(rs.size() == 3);
        CHECK(rs[0] == RelationInstance{"left_of", {"pencil", "notebook"}});
        CHECK(rs[1] == RelationInstance{"central_column", {"notebook"}});
        CHECK(rs[2].args == std::vector<std::string>{"a", "b", "c"});
        try {
            parse_relation_lines("left_of('pencil', 'notebook')\nthe pen is left");
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(std::string(e.what()).find("the pen is left") != std::string::npos);
        }
    }

    TEST_CASE("accept_relations drops invented objects and merges duplicates") {
        const SceneSpec scene = dining_scene();
        RelationLibrary lib = builtin_library();
        auto gw = test_support::mock_gateway();
        TopoRelationSet out;
        accept_relations({{"left_of", {"fork", "plate"}},
                          {"left_of", {"fork", "plate"}},
                          {"left_of", {"fork", "teapot"}},
                          {"left_of", {"fork"}},
                          {"left_of", {"fork", "fork"}}},
                         scene, "", lib, *gw, out);
        CHECK(out.relations.size() == 1);
        REQUIRE(out.dropped.size() == 3);
        CHECK(out.dropped[0].reason == "unknown object: teapot");
    }

    TEST_CASE("accept_relations synthesizes unknown relation names") {
        const SceneSpec scene = dining_scene();
        RelationLibrary lib = builtin_library();
        auto gw = test_support::mock_gateway();
        TopoRelationSet out;
        accept_relations({{"left_below_of", {"fork", "plate"}}}, scene, "", lib, *gw, out);
        CHECK(out.relations.size() == 1);
        REQUIRE(lib.contains("left_below_of"));
        CHECK(lib.provenance("left_below_of") == Provenance::LlmSynthesized);
        CHECK(*lib.at("left_below_of").rpc == Rpc{-1, -1, 0});

        RelationLibrary fresh = builtin_library();
        auto junk = test_support::mock_gateway("gibberish");
        TopoRelationSet none;
        CHECK_THROWS_AS(accept_relations({{"left_below_of", {"fork", "plate"}}}, scene, "", fresh, *junk, none),
                        SynthesisError);
    }

    TEST_CASE("consistency_filter examples") {
        const RelationLibrary lib = builtin_library();
        TopoRelationSet r;
        r.add({"left_of", {"fork", "plate"}});
        const std::vector<std::string> objects = {"plate", "fork", "napkin"};

        const FilterResult kept = consistency_filter(poses_of({{"plate", {0, 0, 0}}, {"fork", {-1, 0, 0}}}, "plate"), r, lib, objects);
        CHECK(kept.relations.relations.size() == 1);
        CHECK(kept.incomplete == std::set<std::string>{"napkin"});

        const FilterResult dropped = consistency_filter(poses_of({{"plate", {0, 0, 0}}, {"fork", {1, 0, 0}}}, "plate"), r, lib, objects);
        CHECK(dropped.relations.relations.empty());
        REQUIRE(dropped.relations.dropped.size() == 1);
        CHECK(dropped.relations.dropped[0].reason == "rpc sign mismatch");
        CHECK(dropped.incomplete == std::set<std::string>{"fork", "napkin"});
    }

    TEST_CASE("consistency_filter matches brute force and is idempotent on random scenes") {
        const RelationLibrary lib = builtin_library();
        std::vector<std::string> binary;
        for (const auto& [name, e] : lib.entries()) {
            if (e.def.kind == RelationKind::Relative) binary.push_back(name);
        }
        const std::vector<std::string> names = {"a", "b", "c", "d"};
        std::mt19937_64 rng(3);
        std::uniform_int_distribution<int> coord(-2, 2);
        for (int trial = 0; trial < 400; ++trial) {
            const std::size_t n = 2 + trial % 3;
            DiscretePoseSet c;
            c.anchor = "a";
            c.poses["a"] = {0, 0, 0};
            for (std::size_t i = 1; i < n; ++i) c.poses[names[i]] = {coord(rng), coord(rng), coord(rng)};
            TopoRelationSet r;
            for (int k = 0; k < 5; ++k) {
                const std::string& rel = binary[rng() % binary.size()];
                const std::size_t i = rng() % n;
                std::size_t j = rng() % n;
                if (j == i) j = (i + 1) % n;
                r.add({rel, {names[i], names[j]}});
            }
            const std::vector<std::string> objects(names.begin(), names.begin() + static_cast<long>(n));
            const FilterResult once = consistency_filter(c, r, lib, objects);

            std::vector<RelationInstance> expect;
            for (const auto& inst : r.relations) {
                const Rpc& v = *lib.at(inst.relation).rpc;
                const auto& p = c.at(inst.args[0]);
                const auto& q = c.at(inst.args[1]);
                bool ok = true;
                for (int axis = 0; axis < 3; ++axis) ok = ok && (v[axis] == 0 || v[axis] * (p[axis] - q[axis]) > 0);
                if (ok) expect.push_back(inst);
            }
            CHECK(once.relations.relations == expect);

            std::set<std::string> incomplete;
            for (const auto& obj : objects) {
                if (obj == "a") continue;
                if (std::none_of(expect.begin(), expect.end(), [&](const RelationInstance& x) { return involves(x, obj); }))
                    incomplete.insert(obj);
            }
            CHECK(once.incomplete == incomplete);

            const FilterResult twice = consistency_filter(c, once.relations, lib, objects);
            CHECK(twice.relations.relations == once.relations.relations);
            CHECK(twice.incomplete == once.incomplete);
        }
    }

    TEST_CASE("repair places the object from a targeted answer") {
        const SceneSpec scene = dining_scene();
        RelationLibrary lib = builtin_library();
        const DiscretePoseSet c = poses_of({{"plate", {0, 0, 0}}, {"fork", {-1, 0, 0}}, {"knife", {1, 0, 0}},
                                            {"spoon", {2, 0, 0}}, {"glass", {1, 1, 0}}},
                                           "plate");
        TopoRelationSet r;
        r.add({"left_of", {"fork", "plate"}});
        r.add({"right_of", {"knife", "plate"}});
        r.add({"right_of", {"spoon", "knife"}});
        r.add({"above_of", {"glass", "knife"}});
        int calls = 0;
        auto gw = test_support::lambda_gateway(
            [](const ChatRequest&) {
                return std::string("</pose>\nnapkin: [-2, 0, 0]\n</pose>\n</relationships>\nleft_of('napkin', 'fork')\n"
                                   "</relationships>");
            },
            &calls);
        SceneDescription desc;
        desc.text = "plate in the middle";
        const RepairResult out = repair_incomplete(c, r, {"napkin"}, scene, desc, lib, *gw);
        CHECK(calls == 1);
        CHECK(out.repaired == std::vector<std::string>{"napkin"});
        CHECK(out.forced.empty());
        CHECK(out.poses.at("napkin") == LatticePoint{-2, 0, 0});
        CHECK(consistency_filter(out.poses, out.relations, lib, scene.object_names()).incomplete.empty());

        CHECK_THROWS_AS(repair_incomplete(c, r, {}, scene, desc, lib, *gw), InvariantError);
    }

    TEST_CASE("repair falls back after two failed attempts") {
        const SceneSpec scene = dining_scene();
        RelationLibrary lib = builtin_library();
        const DiscretePoseSet c = poses_of({{"plate", {0, 0, 0}}, {"fork", {-1, 0, 0}}}, "plate");
        TopoRelationSet r;
        r.add({"left_of", {"fork", "plate"}});
        int calls = 0;
        auto gw = test_support::lambda_gateway([](const ChatRequest&) { return std::string("I cannot place it."); }, &calls);
        const RepairResult out = repair_incomplete(c, r, {"napkin"}, scene, {}, lib, *gw);
        CHECK(calls == 2);
        CHECK(out.forced == std::vector<std::string>{"napkin"});
        CHECK(out.relations.contains({"near_of", {"napkin", "plate"}}));
        REQUIRE(out.poses.contains("napkin"));
        CHECK(out.poses.at("napkin") == nearest_free_cell(c));
    }

    TEST_CASE("nearest_free_cell skips occupied columns") {
        const DiscretePoseSet c = poses_of({{"plate", {0, 0, 0}}, {"bowl", {0, 0, 1}}}, "plate");
        const LatticePoint p = nearest_free_cell(c);
        CHECK(std::abs(p[0]) + std::abs(p[1]) == 1);
        CHECK(p[2] == 0);
        DiscretePoseSet ring = c;
        for (int x = -1; x <= 1; ++x)
            for (int y = -1; y <= 1; ++y) ring.poses["o" + std::to_string(x) + std::to_string(y)] = {x, y, 0};
        const LatticePoint q = nearest_free_cell(ring);
        CHECK(std::max(std::abs(q[0]), std::abs(q[1])) == 2);
    }

    TEST_CASE("stage 1 leaves every object placed and related") {
        const SceneSpec scene = dining_scene();
        for (const char* policy : {"arranger", "omit:napkin", "omit_once:fork"}) {
            CAPTURE(policy);
            RelationLibrary lib = builtin_library();
            auto gw = test_support::mock_gateway(policy);
            const Stage1Result s = run_stage1(scene, lib, *gw, LoopConfig{});
            const FilterResult check = consistency_filter(s.poses, s.relations, lib, scene.object_names());
            CHECK(check.incomplete.empty());
            for (const auto& name : scene.object_names()) CHECK(s.poses.contains(name));
        }
    }
}
