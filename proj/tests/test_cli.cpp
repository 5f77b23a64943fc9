#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "cli/app.hpp"

using omegalab::cli::json;

namespace {

struct Run {
    int status = 0;
    std::string out, err;
    json doc() const { return json::parse(out); }
};

Run run(std::vector<std::string> args) {
    std::ostringstream out, err;
    Run r;
    r.status = omegalab::cli::run(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

const std::string kTwins = R"([{"a":1,"b":0},{"a":1,"b":2}])";

} // namespace

TEST_CASE("cli examples", "[cli]") {
    auto a = run({"alpha", "--t", "2", "--N", "10", "--format", "json"});
    REQUIRE(a.status == 0);
    CHECK(a.doc()["result"]["partial"] == "33/64");
    CHECK(a.out.find("\"partial\": \"33/64\"") != std::string::npos);

    auto c = run({"tuple-count", "--forms", kTwins, "--n-max", "100"});
    REQUIRE(c.status == 0);
    CHECK(c.doc()["result"]["count"] == 8);

    auto s = run({"search-n0", "--K", "2", "--Q", "4", "--L", "4", "--theta2", "2", "--theta3", "1", "--n-max", "100"});
    REQUIRE(s.status == 0);
    const auto sd = s.doc()["result"];
    CHECK(sd["n0"] == 3);
    CHECK(sd["independent_check"]["valid"] == true);
    CHECK(sd["independent_check"]["additivity_holds"] == true);
}

TEST_CASE("report header echoes the config", "[cli]") {
    auto r = run({"--threads", "2", "decompose", "--n0", "3", "--Q", "4", "--K", "2", "--L", "4"});
    REQUIRE(r.status == 0);
    const auto d = r.doc();
    CHECK(d["tool"] == "omegalab");
    CHECK(d["version"] == omegalab::kVersion);
    CHECK(d["command"] == "decompose");
    CHECK(d["config"]["n0"] == 3);
    CHECK(d["config"]["Q"] == 4);
    CHECK(d["config"]["K"] == 2);
    CHECK(d["config"]["L"] == 4);
    CHECK(d["config"]["t"] == 2);
    CHECK(d["config"]["threads"] == 2);
    CHECK(d["config"]["format"] == "json");
    CHECK(d.contains("timing"));
    CHECK(d["result"]["s1_identity"]["holds"] == true);
    CHECK(d["result"]["direct_sum_matches"] == true);
}

TEST_CASE("--no-timing output is byte-identical across runs and thread counts", "[cli][property]") {
    const std::vector<std::vector<std::string>> cmds = {
        {"alpha", "--t", "3", "--N", "40", "--digits", "30"},
        {"hl-compare", "--forms", kTwins, "--n-max", "1000,100000"},
        {"search-n0", "--K", "4", "--Q", "1296", "--L", "6", "--theta2", "3", "--theta3", "1", "--n-max", "50000"},
        {"shiu-mean", "--lambda", "1/2", "--n-max", "1000,20000"},
        {"singular-series", "--family-K", "3", "--P", "100000"},
        {"params", "--log10-x", "100"},
    };
    for (const auto& c : cmds) {
        auto with = [&](const std::string& threads) {
            std::vector<std::string> args{"--no-timing", "--threads", threads};
            args.insert(args.end(), c.begin(), c.end());
            return run(args);
        };
        const auto a = with("1"), b = with("1"), w = with("4");
        REQUIRE(a.status == 0);
        CHECK(a.out == b.out);
        CHECK_FALSE(a.doc().contains("timing"));
        // Only the echoed thread count may differ.
        auto strip = [](json d) {
            d["config"].erase("threads");
            return d.dump();
        };
        CHECK(strip(a.doc()) == strip(w.doc()));
    }
}

TEST_CASE("usage errors exit 64 before computing", "[cli][error]") {
    CHECK(run({"alpha", "--t", "2", "--N", "10", "--bogus", "1"}).status == 64);
    CHECK(run({}).status == 64);
    CHECK(run({"nosuchcommand"}).status == 64);
    CHECK(run({"alpha", "--N", "10"}).status == 64);
    CHECK(run({"alpha", "--t", "two", "--N", "10"}).status == 64);
    CHECK(run({"--format", "xml", "alpha", "--t", "2", "--N", "10"}).status == 64);
    CHECK(run({"tuple-count", "--forms", "[{\"a\":1", "--n-max", "10"}).status == 64);
    CHECK(run({"tuple-count", "--forms", "{\"a\":1}", "--n-max", "10"}).status == 64);
    CHECK(run({"shiu-mean", "--lambda", "abc", "--n-max", "10"}).status == 64);
    CHECK(run({"window", "--profile", "tau=1"}).status == 64);
    CHECK(run({"search-n0", "--n-max", "10"}).status == 64);
    const auto u = run({"alpha", "--bogus"});
    CHECK(u.out.empty());
    CHECK_FALSE(u.err.empty());
}

TEST_CASE("library errors give structured JSON and exit 1", "[cli][error]") {
    auto check = [](const Run& r, const std::string& code) {
        REQUIRE(r.status == 1);
        const auto d = r.doc();
        REQUIRE(d.contains("error"));
        CHECK(d["error"]["code"] == code);
        CHECK(d["error"].contains("message"));
        CHECK(d["error"].contains("context"));
        CHECK_FALSE(d.contains("result"));
        CHECK(d.contains("config"));
    };
    check(run({"alpha", "--t", "1", "--N", "5"}), "domain_error");
    check(run({"search-n0", "--K", "2", "--Q", "2", "--L", "4", "--theta2", "2", "--theta3", "1", "--n-max", "10"}),
          "precondition_error");
    check(run({"singular-series", "--forms", R"([{"a":1,"b":0},{"a":1,"b":1}])"}), "domain_error");
    check(run({"euler-identity", "--K", "2", "--lo", "0", "--hi", "10"}), "precondition_error");
    check(run({"optimum", "--theta", "2"}), "domain_error");
    check(run({"tuple-count", "--forms", R"([{"a":4000000000000000000,"b":1}])", "--n-max", "100"}), "range_error");
}

TEST_CASE("resource errors exit 2", "[cli][error]") {
    CHECK(run({"--output", "/nonexistent-dir/x.json", "alpha", "--t", "2", "--N", "3"}).status == 2);
}

TEST_CASE("--output writes the report to a file", "[cli]") {
    const std::string path = "test_cli_output.json";
    auto r = run({"--output", path, "--no-timing", "alpha", "--t", "2", "--N", "6"});
    REQUIRE(r.status == 0);
    CHECK(r.out.empty());
    std::ifstream in(path);
    const json d = json::parse(in);
    CHECK(d["result"]["partial"] == "1/2");
    std::remove(path.c_str());
}

TEST_CASE("csv output", "[cli]") {
    auto h = run({"--format", "csv", "--no-timing", "hl-compare", "--forms", kTwins, "--n-max", "100,1000"});
    REQUIRE(h.status == 0);
    CHECK(h.out.find("# command: \"hl-compare\"") != std::string::npos);
    CHECK(h.out.find("n_max,empirical,predicted_crude,predicted_integral,ratio_crude,ratio_integral") !=
          std::string::npos);
    CHECK(h.out.find("\n100,8,") != std::string::npos);
    CHECK(h.out.find("\n1000,35,") != std::string::npos);

    auto k = run({"--format", "csv", "alpha", "--t", "2", "--N", "10"});
    REQUIRE(k.status == 0);
    CHECK(k.out.find("key,value\n") != std::string::npos);
    CHECK(k.out.find("partial,33/64\n") != std::string::npos);

    // window defaults to csv
    auto w = run({"--no-timing", "window", "--tmax", "20", "--tsteps", "4"});
    REQUIRE(w.status == 0);
    CHECK(w.out.find("t,abs_mellin,envelope\n") != std::string::npos);
    CHECK(w.out.find("\n20,") != std::string::npos);
}

TEST_CASE("every subcommand runs", "[cli]") {
    CHECK(run({"params", "--log10-x", "100"}).doc()["result"]["Q"] == 7779240000ULL);
    CHECK(run({"params", "--x", "1e100"}).doc()["result"]["K"] == 8);
    const auto adm = run({"admissible", "--forms", R"([{"a":1,"b":0},{"a":1,"b":2},{"a":1,"b":4}])"}).doc();
    CHECK(adm["result"]["admissible"] == false);
    CHECK(adm["result"]["witness"] == 3);
    const auto ss = run({"singular-series", "--forms", R"([{"a":2,"b":1}])", "--P", "1000"}).doc();
    CHECK(std::fabs(ss["result"]["series"]["value"].get<double>() - 2) < 1e-9);
    const auto pk = run({"singular-series", "--family-K", "2"}).doc();
    CHECK(pk["result"]["chain"]["total_at_least_K^-2K"] == true);
    CHECK(run({"brun-check", "--m", "30", "--V", "1"}).doc()["result"]["sum"] == -2);
    const auto brun = run({"brun-check", "--primes", "6", "--V-max", "6"}).doc();
    CHECK(brun["result"]["violations"] == 0);
    CHECK(brun["result"]["cases"] == 64 * 7);
    const auto eu = run({"euler-identity", "--K", "2", "--lo", "3", "--hi", "30", "--exclude", "7", "--V", "2"}).doc();
    CHECK(eu["result"]["equal"] == true);
    CHECK(eu["result"]["truncation"]["dominates"] == true);
    const auto sm = run({"shiu-mean", "--lambda", "1/2", "--n-max", "6"}).doc();
    CHECK(sm["result"]["rows"][0]["exact"] == "13/4");
    const auto sf = run({"shiu-mean", "--lambda", "0.5", "--n-max", "6"}).doc();
    CHECK(sf["result"]["rows"][0]["value"] == 3.25);
    const auto op = run({"optimum"}).doc();
    CHECK(std::fabs(op["result"]["lambda_star"].get<double>() - 0.1) < 1e-6);
    const auto wj = run({"--format", "json", "window", "--tmax", "50", "--tsteps", "10"}).doc();
    CHECK(wj["result"]["profile"]["c"].get<double>() > 0);
    CHECK(wj["result"]["derivative_growth"]["non_growing"] == true);
    const auto al = run({"alpha", "--t", "2", "--N", "20", "--probe-a", "1", "--probe-b", "2"}).doc();
    CHECK(al["result"]["integrality_probe"]["consistent"] == false);
    const auto sx = run({"search-n0", "--log10-x", "100", "--n-max", "10"});
    CHECK(sx.status == 0);
    CHECK(sx.doc()["result"]["spec"]["K"] == 8);
    CHECK(run({"--help"}).status == 0);
    CHECK(run({"--version"}).out == std::string(omegalab::kVersion) + "\n");
}
