#include <doctest.h>

#include "layoutforge/corpus.hpp"
#include "layoutforge/errors.hpp"
#include "layoutforge/validation_loop.hpp"
#include "test_support.hpp"

using namespace layoutforge;
using test_support::box;
using test_support::layout_of;

namespace {

SceneSpec dining_scene() {
    return make_scene(find_scenario(bundled_corpus(), "Dining_Table"), 0, SizeCatalog::bundled(), 7);
}

GroundingConfig seeded(std::uint64_t seed) {
    GroundingConfig cfg;
    cfg.rng_seed = seed;
    return cfg;
}

// Two 60 x 40 cm boxes on a 120 cm table can never keep a gap between them.
std::string crowded_reply(const ChatRequest& r) {
    if (r.purpose == "rrg_describe") return "</Description>\nbox-a stands near box-b.\n</Description>";
    if (r.purpose == "rrg_critique") return "</output>\nTrue\n</output>";
    if (r.purpose == "fast_poses") return "</pose>\nbox-a: [0, 0, 0]\nbox-b: [1, 0, 0]\n</pose>";
    if (r.purpose == "fast_relations") return "</relationships>\nnear_of('box-b', 'box-a')\n</relationships>";
    return "unexpected";
}

}  // namespace

TEST_SUITE("validation_loop") {
    TEST_CASE("validate_layout lists failures in input order") {
        const RelationLibrary lib = builtin_library();
        const Boundary table;
        TopoRelationSet r;
        r.add({"left_of", {"fork", "plate"}});
        r.add({"right_of", {"knife", "plate"}});
        const Aabb plate = box(40, 10, 0, 66, 36, 2);
        const Layout good = layout_of({{"fork", box(35, 14, 0, 37, 32, 1)}, {"plate", plate}, {"knife", box(69, 14, 0, 71, 32, 1)}});
        CHECK(validate_layout(good, r, lib, table).empty());

        const Layout bad = layout_of({{"fork", box(75, 14, 0, 77, 32, 1)}, {"plate", plate}, {"knife", box(69, 14, 0, 71, 32, 1)}});
        const auto failed = validate_layout(bad, r, lib, table);
        REQUIRE(failed.size() == 1);
        CHECK(failed[0] == RelationInstance{"left_of", {"fork", "plate"}});

        TopoRelationSet unknown;
        unknown.add({"floating_over", {"fork", "plate"}});
        CHECK_THROWS_AS(validate_layout(good, unknown, lib, table), LibraryError);
    }

    TEST_CASE("loop config invariants") {
        LoopConfig cfg;
        CHECK(cfg.max_rounds == 5);
        CHECK(cfg.max_adjustments_per_relation == 3);
        CHECK(cfg.regrounds_per_round == 2);
        cfg.max_rounds = 0;
        CHECK_THROWS_AS(cfg.check(), InvariantError);
    }

    TEST_CASE("the dining fixture solves in one round") {
        const SceneSpec scene = dining_scene();
        Gateway gw(GatewayMode::Replay, nullptr, test_support::fixture("Dining_Table_0.cassette.jsonl"));
        const RelationLibrary lib = builtin_library();
        const RunReport rep = run_closed_loop(scene, lib, gw, LoopConfig{}, seeded(7));
        CHECK(rep.solved);
        CHECK(rep.rounds_used == 1);
        CHECK(rep.error.empty());
        CHECK(validate_layout(rep.final_layout, rep.surviving_relations, rep.library, scene.boundary).empty());
        CHECK(rep.metrics.cf == 100.0);
        CHECK(rep.metrics.ib == 100.0);
        CHECK(rep.metrics.fc == 100.0);
        CHECK_FALSE(rep.fingerprints.empty());
        CHECK(lib == builtin_library());
    }

    TEST_CASE("mock runs solve deterministically") {
        const SceneSpec scene = dining_scene();
        auto g1 = test_support::mock_gateway();
        auto g2 = test_support::mock_gateway();
        const RunReport a = run_closed_loop(scene, builtin_library(), *g1, LoopConfig{}, seeded(3));
        const RunReport b = run_closed_loop(scene, builtin_library(), *g2, LoopConfig{}, seeded(3));
        CHECK(a.solved);
        CHECK(a.final_layout == b.final_layout);
        CHECK(a.fingerprints == b.fingerprints);
    }

    TEST_CASE("unsatisfiable relations exhaust adjustments and every round") {
        SceneSpec scene = test_support::scene_of({{"box-a", {60, 40, 10}}, {"box-b", {60, 40, 10}}});
        GroundingConfig cfg = seeded(1);
        cfg.population = 100;
        cfg.generations = 20;
        auto gw = test_support::lambda_gateway(crowded_reply);
        const RunReport rep = run_closed_loop(scene, builtin_library(), *gw, LoopConfig{}, cfg);
        CHECK_FALSE(rep.solved);
        CHECK(rep.rounds_used == 5);
        CHECK(rep.rounds.size() == 5);
        CHECK(rep.final_layout.size() == 2);
        CHECK(rep.error.empty());
        REQUIRE_FALSE(rep.adjustments.empty());
        CHECK(rep.adjustments.size() <= 3);
        for (const auto& a : rep.adjustments) {
            CHECK(a.new_max_gap_frac >= a.old_max_gap_frac);
            CHECK(a.new_tolerance_frac >= a.old_tolerance_frac);
            CHECK(a.revision <= 3);
        }
        CHECK(rep.library.at("near_of").revision == static_cast<int>(rep.adjustments.size()));
        CHECK(rep.library.provenance("near_of") == Provenance::Adjusted);
    }

    TEST_CASE("rounds after the first carry feedback") {
        SceneSpec scene = test_support::scene_of({{"box-a", {60, 40, 10}}, {"box-b", {60, 40, 10}}});
        GroundingConfig cfg = seeded(1);
        cfg.population = 20;
        cfg.generations = 2;
        LoopConfig loop;
        loop.max_rounds = 2;
        std::vector<std::string> describe;
        auto gw = test_support::lambda_gateway([&](const ChatRequest& r) {
            if (r.purpose == "rrg_describe") describe.push_back(r.messages.back().text);
            return crowded_reply(r);
        });
        const RunReport rep = run_closed_loop(scene, builtin_library(), *gw, loop, cfg);
        CHECK(rep.rounds_used == 2);
        REQUIRE(describe.size() == 2);
        CHECK(describe[1].find("near_of('box-b', 'box-a')") != std::string::npos);
    }

    TEST_CASE("never approved descriptions still yield a layout within the round budget") {
        const SceneSpec scene = dining_scene();
        auto gw = test_support::mock_gateway("never_approve");
        const RunReport rep = run_closed_loop(scene, builtin_library(), *gw, LoopConfig{}, seeded(2));
        CHECK(rep.rounds_used <= 5);
        CHECK(rep.final_layout.size() == scene.objects.size());
        for (const auto& round : rep.rounds) CHECK_FALSE(round.description_approved);
        if (rep.solved) CHECK(validate_layout(rep.final_layout, rep.surviving_relations, rep.library, scene.boundary).empty());
    }

    TEST_CASE("gateway failures abort with a diagnostic") {
        const SceneSpec scene = dining_scene();
        ScriptedProvider inner;
        auto gw = test_support::lambda_gateway([&](const ChatRequest& r) -> std::string {
            if (r.purpose == "fast_poses") throw ProviderError(503, "provider error: HTTP 503");
            return inner.complete(r);
        });
        const RunReport rep = run_closed_loop(scene, builtin_library(), *gw, LoopConfig{}, seeded(2));
        CHECK_FALSE(rep.solved);
        CHECK(rep.rounds_used == 1);
        CHECK(rep.error.find("503") != std::string::npos);
    }

    TEST_CASE("unparseable replies abandon the round, not the run") {
        const SceneSpec scene = dining_scene();
        auto gw = test_support::mock_gateway("gibberish");
        LoopConfig loop;
        loop.max_rounds = 2;
        const RunReport rep = run_closed_loop(scene, builtin_library(), *gw, loop, seeded(2));
        CHECK_FALSE(rep.solved);
        CHECK(rep.rounds_used == 2);
        CHECK(rep.error.empty());
        for (const auto& round : rep.rounds) CHECK_FALSE(round.error.empty());
    }
}
