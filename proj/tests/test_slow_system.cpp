#include <doctest.h>

#include "layoutforge/corpus.hpp"
#include "layoutforge/errors.hpp"
#include "layoutforge/slow_system.hpp"
#include "test_support.hpp"

using namespace layoutforge;

namespace {

SceneSpec dining_scene() {
    const auto corpus = bundled_corpus();
    return make_scene(find_scenario(corpus, "Dining_Table"), 0, SizeCatalog::bundled(), 7);
}

Gateway replay(const std::string& fixture) { return Gateway(GatewayMode::Replay, nullptr, test_support::fixture(fixture)); }

}  // namespace

TEST_SUITE("slow_system") {
    TEST_CASE("find_mentions matches whole names") {
        const std::vector<std::string> names = {"cup", "cup saucer", "pen", "cup-0"};
        CHECK(find_mentions("The cup saucer holds nothing.", names) == std::set<std::string>{"cup saucer"});
        CHECK(find_mentions("The cup stands on the cup saucer.", names) == std::set<std::string>{"cup", "cup saucer"});
        CHECK(find_mentions("Open the drawer.", names).empty());
        CHECK(find_mentions("cup-0 is left of the pen.", names) == std::set<std::string>{"cup-0", "pen"});
        CHECK(find_mentions("", names).empty());
    }

    TEST_CASE("parse_critique") {
        const CritiqueResult ok = parse_critique("</output>\nTrue\n</output>");
        CHECK(ok.approved);
        CHECK(ok.issues.empty());

        const CritiqueResult bad = parse_critique(
            "</output>\nFalse\n</output>\n</issue>\n1. Missing clarification of where the napkin goes.\n"
            "2. The spoon is described twice.\n</issue>");
        CHECK_FALSE(bad.approved);
        CHECK(bad.issues.size() == 2);

        CHECK(parse_critique("</output> FALSE </output>").issues.empty());
        CHECK_THROWS_AS(parse_critique("</output>\nmaybe\n</output>"), ParseError);
        CHECK_THROWS_AS(parse_critique("True"), ParseError);
    }

    TEST_CASE("generate_description from the dining fixture mentions every object") {
        const SceneSpec scene = dining_scene();
        Gateway gw = replay("Dining_Table_0.cassette.jsonl");
        const SceneDescription d = generate_description(scene, builtin_library(), gw);
        const auto names = scene.object_names();
        CHECK(d.mentioned_objects == std::set<std::string>(names.begin(), names.end()));
        CHECK(d.mentioned_objects.size() == 6);
    }

    TEST_CASE("rrg approves on the second pass after one issue") {
        const SceneSpec scene = dining_scene();
        Gateway gw = replay("dining_describe_omit.cassette.jsonl");
        const SceneDescription d = rrg(scene, builtin_library(), gw);
        CHECK(d.approved);
        CHECK(d.iterations_used == 2);
        CHECK(d.mentioned_objects.count("napkin") == 1);

        Gateway again = replay("dining_describe_omit.cassette.jsonl");
        CHECK(rrg(scene, builtin_library(), again).text == d.text);
    }

    TEST_CASE("a first description that omits an object is not approved") {
        const SceneSpec scene = dining_scene();
        auto gw = test_support::mock_gateway("describe_omit:napkin");
        const SceneDescription first = generate_description(scene, builtin_library(), *gw);
        CHECK(first.mentioned_objects.count("napkin") == 0);
        CHECK(first.mentioned_objects.size() < scene.objects.size());
    }

    TEST_CASE("rrg gives up after max_iters without throwing") {
        const SceneSpec scene = dining_scene();
        int calls = 0;
        ScriptedProvider inner("never_approve");
        auto gw = test_support::lambda_gateway([&](const ChatRequest& r) { return inner.complete(r); }, &calls);
        const SceneDescription d = rrg(scene, builtin_library(), *gw, 3);
        CHECK_FALSE(d.approved);
        CHECK(d.iterations_used == 3);
        CHECK(calls == 6);
        CHECK_THROWS_AS(rrg(scene, builtin_library(), *gw, 0), InvariantError);
    }

    TEST_CASE("rrg approves on the first pass with the arranger") {
        const SceneSpec scene = dining_scene();
        auto gw = test_support::mock_gateway();
        const SceneDescription d = rrg(scene, builtin_library(), *gw);
        CHECK(d.approved);
        CHECK(d.iterations_used == 1);
    }

    TEST_CASE("rrg feeds issues back into the next prompt") {
        const SceneSpec scene = dining_scene();
        std::vector<std::string> describe_prompts;
        ScriptedProvider inner("describe_omit:napkin");
        auto gw = test_support::lambda_gateway([&](const ChatRequest& r) {
            if (r.purpose == "rrg_describe") describe_prompts.push_back(r.messages.back().text);
            return inner.complete(r);
        });
        rrg(scene, builtin_library(), *gw);
        REQUIRE(describe_prompts.size() == 2);
        CHECK(describe_prompts[0].find("Corrections requested") == std::string::npos);
        CHECK(describe_prompts[1].find("Corrections requested") != std::string::npos);
        CHECK(describe_prompts[1].find("napkin") != std::string::npos);
    }
}
