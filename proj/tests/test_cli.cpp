#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>
#include <sys/wait.h>

#include <nlohmann/json.hpp>

#include "phi3/term.hpp"

using nlohmann::json;

namespace {

struct RunResult {
    int code = -1;
    std::string out;
};

RunResult run(const std::string& args) {
    std::string cmd = std::string(PHI3_BIN) + " " + args + " 2>/dev/null";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    RunResult r;
    char buf[4096];
    size_t got;
    while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, got);
    int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

}  // namespace

TEST_CASE("expand emits the series and round-trips through the serializer") {
    auto r = run("expand --order 2");
    REQUIRE(r.code == 0);
    json j = json::parse(r.out);
    CHECK(j["order"] == 2);
    REQUIRE(j["series"].contains("0"));
    REQUIRE(j["series"].contains("1"));
    REQUIRE(j["series"].contains("2"));
    CHECK(j["series"]["2"]["pretty"].get<std::string>().find("3 ") == 0);

    // JSON round-trip: parse the emitted terms back and compare exactly
    phi3::FormalSeries ref = phi3::expand_solution(2);
    for (const auto& [key, sum] : ref.orders) {
        phi3::TermSum parsed = phi3::sum_from_json(j["series"][std::to_string(key)]["terms"]);
        CHECK(phi3::collect(parsed) == phi3::collect(sum));
    }
}

TEST_CASE("expand edge cases") {
    auto r0 = run("expand --order 0");
    REQUIRE(r0.code == 0);
    json j = json::parse(r0.out);
    CHECK(j["series"].size() == 1);
    REQUIRE(j["series"]["0"]["terms"].size() == 1);
    CHECK(j["series"]["0"]["terms"][0]["term"]["tag"] == "phi");

    CHECK(run("expand --order -1").code == 2);
    CHECK(run("expand").code == 2);           // --order is required
    CHECK(run("expand --order 1 --format csv").code == 2);
}

TEST_CASE("diagrams honors subcriticality and formats") {
    CHECK(run("diagrams --d 4").code == 3);
    CHECK(run("diagrams --d 5").code == 3);

    auto d2 = run("diagrams --d 2 --nmax 4");
    REQUIRE(d2.code == 0);
    CHECK(d2.out.find("n,l,val2,val3,val4,rho") == 0);
    CHECK(d2.out.find("2,2,2,0,0,0,1") != std::string::npos);  // fish, rho = 0, divergent

    auto d3 = run("diagrams --d 3");  // certified divergent list
    REQUIRE(d3.code == 0);
    int rows = 0;
    for (char c : d3.out)
        if (c == '\n') ++rows;
    CHECK(rows == 5);  // header + four divergent graphs

    auto dot = run("diagrams --d 3 --format dot");
    REQUIRE(dot.code == 0);
    CHECK(dot.out.find("graph g0 {") == 0);

    auto js = run("diagrams --d 3 --format json");
    REQUIRE(js.code == 0);
    json j = json::parse(js.out);
    CHECK(j["n_threshold"] == 20);
    CHECK(j["graphs"].size() == 4);

    CHECK(run("diagrams --d 3 --nmax 10 --cap 10").code == 4);  // resource cap
}

TEST_CASE("correlate and renorm-eq emit symbolic reports") {
    auto c = run("correlate --order 1");
    REQUIRE(c.code == 0);
    json j = json::parse(c.out);
    REQUIRE(j["orders"].contains("1"));
    std::string pretty = j["orders"]["1"]["pretty"].get<std::string>();
    CHECK(pretty.find("-3 ") != std::string::npos);
    CHECK(pretty.find("C") != std::string::npos);

    auto m = run("renorm-eq --order 2");
    REQUIRE(m.code == 0);
    json mj = json::parse(m.out);
    REQUIRE(mj["M"].contains("1"));
    REQUIRE(mj["M"].contains("2"));
    CHECK(mj["M"]["1"]["pretty"].get<std::string>().find("3 * { x0[Phi C] }") !=
          std::string::npos);
    CHECK(mj["M"]["2"]["pretty"].get<std::string>().find("-18 ") != std::string::npos);

    CHECK(run("renorm-eq --order 0").code == 2);
}

TEST_CASE("kernel identity table") {
    auto r = run("kernel --kl --d 2 --n 1");
    REQUIRE(r.code == 0);
    json j = json::parse(r.out);
    CHECK(j["max_rel_error"].get<double>() < 1e-5);
    CHECK(j["rows"].size() == 20);

    auto csv = run("kernel --kl --d 1 --n 1 --format csv");
    REQUIRE(csv.code == 0);
    CHECK(csv.out.find("t,r,direct,spectral,rel_error") == 0);
    CHECK(csv.out.find("max_rel_error") != std::string::npos);

    CHECK(run("kernel --d 2 --n 1").code == 2);            // needs --kl or --pair
    CHECK(run("kernel --kl --pair --d 2 --n 1").code == 2);

    auto pair = run("kernel --pair --d 2 --n 1");
    REQUIRE(pair.code == 0);
    json pj = json::parse(pair.out);
    CHECK(pj["abs_difference"].get<double>() < 1e-5);
}

TEST_CASE("scaling-degree estimates") {
    auto r = run("sd --kernel heat-power --d 2 --power 1");
    REQUIRE(r.code == 0);
    json j = json::parse(r.out);
    CHECK(j["analytic"] == 2.0);
    CHECK(j["abs_error"].get<double>() < 0.15);

    auto p = run("sd --kernel power-law --d 1 --exponent 0.5");
    REQUIRE(p.code == 0);
    CHECK(json::parse(p.out)["abs_error"].get<double>() < 0.15);

    CHECK(run("sd --kernel bogus").code == 2);
    CHECK(run("sd --kernel power-law --d 1 --exponent -1").code == 2);
}

TEST_CASE("mc validation wrapper, config file, and output file") {
    auto r = run("mc --validate first-order --seed 7 --samples 400");
    REQUIRE(r.code == 0);
    json j = json::parse(r.out);
    CHECK(j["report"]["pass_3se"] == true);
    CHECK(j["report"]["se"].get<double>() > 0.0);
    CHECK(j["lambda"] == 0.3);

    // deterministic given the seed: identical bytes
    auto again = run("mc --validate first-order --seed 7 --samples 400");
    CHECK(again.out == r.out);
    auto other = run("mc --validate first-order --seed 8 --samples 400");
    CHECK(other.out != r.out);

    // config file overrides the coupling
    {
        std::ofstream cfg("/tmp/phi3_cli_cfg.txt");
        cfg << "lambda = 0.75  # coupling\n";
    }
    auto c = run("mc --validate first-order --seed 7 --samples 400 --config /tmp/phi3_cli_cfg.txt");
    REQUIRE(c.code == 0);
    CHECK(json::parse(c.out)["lambda"] == 0.75);

    // --out writes the same JSON to a file
    auto o = run("mc --validate first-order --seed 7 --samples 400 --out /tmp/phi3_cli_out.json");
    REQUIRE(o.code == 0);
    std::ifstream in("/tmp/phi3_cli_out.json");
    REQUIRE(in.good());
    json file_j = json::parse(in);
    CHECK(file_j == j);

    CHECK(run("mc --validate bogus").code == 2);
    CHECK(run("mc --validate first-order --samples 10").code == 2);  // too few samples
}

TEST_CASE("unknown subcommands and missing arguments exit with code 2") {
    CHECK(run("frobnicate").code == 2);
    CHECK(run("").code == 2);
    CHECK(run("expand --order notanumber").code == 2);
}
