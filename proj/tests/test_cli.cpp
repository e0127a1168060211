#include <doctest.h>

#include <sstream>

#include "layoutforge/cli.hpp"
#include "layoutforge/layout_io.hpp"
#include "test_support.hpp"

using namespace layoutforge;
namespace fs = std::filesystem;

namespace {

struct CliResult {
    int code;
    std::string out;
    std::string err;
};

CliResult cli(std::vector<std::string> args) {
    args.insert(args.begin(), "layoutforge");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string dining_cassette() { return test_support::fixture("Dining_Table_0.cassette.jsonl").string(); }

// One replayed dining run shared by the tests below.
const fs::path& dining_run() {
    static const fs::path dir = [] {
        const auto d = test_support::temp_dir("cli_dining");
        const CliResult r = cli({"generate", "Dining_Table", "0", "--mode", "replay", "--cassette", dining_cassette(),
                                 "--seed", "7", "--out", (d / "run").string()});
        REQUIRE(r.code == 0);
        return d / "run";
    }();
    return dir;
}

}  // namespace

TEST_SUITE("cli") {
    TEST_CASE("replayed generate writes five artifacts") {
        const fs::path& dir = dining_run();
        for (const char* f : {"layout.json", "metrics.json", "layout.svg", "run.cassette.jsonl", "report.json"}) {
            CHECK(fs::exists(dir / f));
        }
        const StoredReport rep = report_from_json(read_text_file(dir / "report.json"));
        CHECK(rep.solved);
        CHECK(rep.rounds_used == 1);
        CHECK(layout_from_json(read_text_file(dir / "layout.json")).size() == 6);
    }

    TEST_CASE("generate errors") {
        const auto dir = test_support::temp_dir("cli_errors");
        const CliResult unknown = cli({"generate", "Garden_Table", "0", "--mode", "mock", "--out", (dir / "g").string()});
        CHECK(unknown.code == 1);
        CHECK(unknown.err.find("Garden_Table") != std::string::npos);
        CHECK(fs::exists(dir / "g" / "report.json"));
        CHECK_FALSE(report_from_json(read_text_file(dir / "g" / "report.json")).error.empty());

        const CliResult no_cassette = cli({"generate", "Dining_Table", "0", "--mode", "replay", "--out", (dir / "r").string()});
        CHECK(no_cassette.code == 1);
        CHECK(no_cassette.err.find("--cassette") != std::string::npos);

        CHECK(cli({"generate", "Dining_Table", "9", "--mode", "mock", "--out", (dir / "c").string()}).code == 1);
        CHECK(cli({"frobnicate"}).code == 1);
        CHECK(cli({"generate", "Dining_Table", "0", "--mode", "sideways", "--out", (dir / "s").string()}).code == 1);
    }

    TEST_CASE("mock generate with an omitted object still places it") {
        const auto dir = test_support::temp_dir("cli_mock");
        const CliResult r = cli({"generate", "Dining_Table", "0", "--mode", "mock", "--policy", "omit:napkin", "--seed", "7",
                                 "--out", dir.string()});
        CHECK(r.code == 0);
        CHECK(layout_from_json(read_text_file(dir / "layout.json")).contains("napkin"));
        CHECK(metrics_from_json(read_text_file(dir / "metrics.json")).fc == 100.0);
    }

    TEST_CASE("evaluate") {
        const fs::path& run = dining_run();
        const CliResult full = cli({"evaluate", (run / "layout.json").string(), "--scenario", "Dining_Table", "--case", "0"});
        REQUIRE(full.code == 0);
        const MetricsReport m = metrics_from_json(full.out);
        CHECK(m.cf == 100.0);
        CHECK(m.ib == 100.0);
        CHECK(m.fc == 100.0);

        const auto dir = test_support::temp_dir("cli_evaluate");
        Layout five = layout_from_json(read_text_file(run / "layout.json"));
        five.poses.erase("napkin");
        five.boxes.erase("napkin");
        five.plane_points.erase("napkin");
        write_text_file(dir / "layout.json", layout_to_json(five));
        const CliResult partial = cli({"evaluate", (dir / "layout.json").string(), "--scenario", "Dining_Table", "--case", "0"});
        REQUIRE(partial.code == 0);
        CHECK(metrics_from_json(partial.out).fc == 83.3);

        const CliResult judged = cli({"evaluate", (run / "layout.json").string(), "--scenario", "Dining_Table", "--case", "0",
                                      "--judge", "--mode", "mock", "--out", (dir / "metrics.json").string()});
        REQUIRE(judged.code == 0);
        const MetricsReport j = metrics_from_json(read_text_file(dir / "metrics.json"));
        CHECK(j.pos == 75.0);
        CHECK(j.ali == 70.0);
        REQUIRE(j.psf.has_value());

        write_text_file(dir / "bad.json", "{\"plate\": {\"center\": [1, 2]}}");
        CHECK(cli({"evaluate", (dir / "bad.json").string()}).code == 1);
        CHECK(cli({"evaluate", (dir / "absent.json").string()}).code == 1);
    }

    TEST_CASE("render is deterministic") {
        const fs::path& run = dining_run();
        const CliResult a = cli({"render", (run / "layout.json").string(), "--scenario", "Dining_Table"});
        const CliResult b = cli({"render", (run / "layout.json").string(), "--scenario", "Dining_Table"});
        REQUIRE(a.code == 0);
        CHECK(a.out == b.out);
        CHECK(a.out == read_text_file(run / "layout.svg"));
    }

    TEST_CASE("bench") {
        const CliResult check = cli({"bench", "--psf-check", test_support::data_file("table2_avg.csv").string()});
        CHECK(check.code == 0);
        for (const char* method : {"LayoutGPT", "HOLODECK", "I-Design", "AutoLayout"}) {
            CHECK(check.out.find(method) != std::string::npos);
        }

        const auto dir = test_support::temp_dir("cli_bench");
        write_text_file(dir / "wrong.csv", "method,CF,IB,Pos,Ali,FC,PSF\nX,100,100,100,100,100,90.0\n");
        CHECK(cli({"bench", "--psf-check", (dir / "wrong.csv").string()}).code == 2);

        fs::create_directories(dir / "empty");
        CHECK(cli({"bench", (dir / "empty").string()}).code == 1);

        fs::create_directories(dir / "single" / "Dining_Table" / "run0");
        fs::copy_file(dining_run() / "layout.json", dir / "single" / "Dining_Table" / "run0" / "layout.json");
        const CliResult one = cli({"bench", (dir / "single").string(), "--csv", (dir / "bench.csv").string()});
        REQUIRE(one.code == 0);
        std::istringstream lines(read_text_file(dir / "bench.csv"));
        std::string header, row, avg, extra;
        std::getline(lines, header);
        std::getline(lines, row);
        std::getline(lines, avg);
        CHECK_FALSE(std::getline(lines, extra));
        CHECK(row.rfind("Dining_Table,", 0) == 0);
        CHECK(avg.rfind("Average,", 0) == 0);
        CHECK(row.substr(row.find(',')) == avg.substr(avg.find(',')));
    }
}
