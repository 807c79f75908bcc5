#include <catch2/catch_amalgamated.hpp>

#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "impulse/cli.hpp"

namespace fs = std::filesystem;
using namespace impulse;

namespace {

std::string spec_path(const char* name) {
    return std::string(IMPULSE_SPEC_DIR) + "/" + name;
}

struct TempDir {
    fs::path dir;
    TempDir() {
        dir = fs::temp_directory_path() /
              ("impulse_cli_" + std::to_string(::getpid()) + "_" +
               std::to_string(counter()++));
        fs::create_directories(dir);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(dir, ec);
    }
    std::string file(const char* name) const { return (dir / name).string(); }
    static int& counter() {
        static int n = 0;
        return n;
    }
};

// keeps error JSON emitted on stderr out of the test log, and capturable
struct CerrCapture {
    std::ostringstream buffer;
    std::streambuf* old;
    CerrCapture() : old(std::cerr.rdbuf(buffer.rdbuf())) {}
    ~CerrCapture() { std::cerr.rdbuf(old); }
    std::string text() const { return buffer.str(); }
};

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::vector<std::vector<std::string>> rows;
    for (std::string line; std::getline(in, line);) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
        rows.push_back(cells);
    }
    return rows;
}

}  // namespace

TEST_CASE("solve writes the closed-form tuple for a symmetric spec") {
    TempDir tmp;
    const std::string out = tmp.file("params.json");
    CerrCapture quiet;
    const int rc = cli::run({"solve", spec_path("problem1.json"), "--method", "closed",
                             "--out", out});
    REQUIRE(rc == cli::kExitOk);
    const EquilibriumParams p = load_params(out);
    CHECK(p.xbar2 == Catch::Approx(2.8237953421536241).epsilon(1e-12));
    CHECK(p.xstar1 == Catch::Approx(1.5242689353811108).epsilon(1e-12));
}

TEST_CASE("closed method refuses non-symmetric specs") {
    TempDir tmp;
    CerrCapture err;
    const int rc = cli::run({"solve", spec_path("cubic.json"), "--method", "closed",
                             "--out", tmp.file("p.json")});
    CHECK(rc == cli::kExitValidation);
    CHECK(err.text().find("symmetric-linear") != std::string::npos);
}

TEST_CASE("solve rejects an invalid spec with a machine-readable error") {
    TempDir tmp;
    const std::string bad = tmp.file("bad.json");
    {
        std::ofstream os(bad);
        os << R"({"sigma": 0.15, "rho": 0.02,
                  "costs": {"c": 100, "c_tilde": 0, "lambda": 60, "lambda_tilde": 0},
                  "f1": [3, 1], "f2": [3, -1]})";
    }
    CerrCapture err;
    const int rc = cli::run({"solve", bad});
    CHECK(rc == cli::kExitValidation);
    const nlohmann::json j = nlohmann::json::parse(err.text());
    CHECK(j.contains("error"));
    CHECK(j.at("code").get<int>() == cli::kExitValidation);
    REQUIRE(j.contains("issues"));
    bool found = false;
    for (const auto& issue : j.at("issues"))
        if (issue.get<std::string>().find("ExCond") != std::string::npos) found = true;
    CHECK(found);
}

TEST_CASE("numeric solve round-trips through verification for every bundled spec") {
    for (const char* name :
         {"problem1.json", "problem2.json", "cubic.json", "linear_cubic.json"}) {
        TempDir tmp;
        const std::string params = tmp.file("params.json");
        const std::string report = tmp.file("report.json");
        CerrCapture quiet;
        REQUIRE(cli::run({"solve", spec_path(name), "--out", params}) == cli::kExitOk);
        REQUIRE(cli::run({"verify", spec_path(name), params, "--out", report}) == cli::kExitOk);
        const nlohmann::json rep = load_json_file(report);
        CHECK(rep.at("passed").get<bool>());
    }
}

TEST_CASE("verify fails with exit 3 but still writes the report") {
    TempDir tmp;
    const std::string params = tmp.file("params.json");
    const std::string report = tmp.file("report.json");
    CerrCapture quiet;
    REQUIRE(cli::run({"solve", spec_path("problem1.json"), "--method", "closed", "--out",
                      params}) == cli::kExitOk);

    nlohmann::json j = load_json_file(params);
    j["xbar2"] = j["xbar2"].get<double>() + 0.2;
    {
        std::ofstream os(tmp.file("broken.json"));
        os << j.dump();
    }
    const int rc = cli::run({"verify", spec_path("problem1.json"), tmp.file("broken.json"),
                             "--out", report});
    CHECK(rc == cli::kExitCertificationFailed);
    const nlohmann::json rep = load_json_file(report);
    CHECK_FALSE(rep.at("passed").get<bool>());
    CHECK(rep.at("checks").contains("pasting"));
}

TEST_CASE("simulate gates on certification and reports the estimate") {
    TempDir tmp;
    const std::string params = tmp.file("params.json");
    const std::string est_path = tmp.file("estimate.json");
    CerrCapture quiet;
    REQUIRE(cli::run({"solve", spec_path("problem1.json"), "--method", "closed", "--out",
                      params}) == cli::kExitOk);

    const int rc = cli::run({"simulate", spec_path("problem1.json"), params, "--x0", "0",
                             "--paths", "64", "--dt", "0.05", "--horizon", "60", "--seed",
                             "9", "--out", est_path, "--trace", tmp.file("trace.csv")});
    REQUIRE(rc == cli::kExitOk);
    const nlohmann::json est = load_json_file(est_path);
    CHECK(est.contains("j1_mean"));
    CHECK(est.contains("truncation_bound"));
    CHECK(est.at("dt").get<double>() == 0.05);
    std::ifstream trace(tmp.file("trace.csv"));
    std::string header;
    std::getline(trace, header);
    CHECK(header == "t,x,player,impulse,discounted_cost");

    // a perturbed tuple is rejected unless forced
    nlohmann::json j = load_json_file(params);
    j["xbar2"] = j["xbar2"].get<double>() + 0.2;
    {
        std::ofstream os(tmp.file("broken.json"));
        os << j.dump();
    }
    CHECK(cli::run({"simulate", spec_path("problem1.json"), tmp.file("broken.json"), "--paths",
                    "8", "--dt", "0.05", "--horizon", "20"}) == cli::kExitCertificationFailed);

    std::ostringstream forced_out;
    auto* old = std::cout.rdbuf(forced_out.rdbuf());
    const int rc_forced =
        cli::run({"simulate", spec_path("problem1.json"), tmp.file("broken.json"), "--paths",
                  "8", "--dt", "0.05", "--horizon", "20", "--force"});
    std::cout.rdbuf(old);
    CHECK(rc_forced == cli::kExitOk);
}

TEST_CASE("simulate reports an undefined standard error as insufficient") {
    TempDir tmp;
    const std::string params = tmp.file("params.json");
    const std::string est_path = tmp.file("estimate.json");
    CerrCapture quiet;
    REQUIRE(cli::run({"solve", spec_path("problem1.json"), "--method", "closed", "--out",
                      params}) == cli::kExitOk);
    REQUIRE(cli::run({"simulate", spec_path("problem1.json"), params, "--paths", "1", "--dt",
                      "0.05", "--horizon", "20", "--out", est_path}) == cli::kExitOk);
    const nlohmann::json est = load_json_file(est_path);
    CHECK(est.at("j1_se").is_string());
    CHECK(est.at("j1_se").get<std::string>() == "insufficient");
}

TEST_CASE("simulate requires a readable params file") {
    CerrCapture quiet;
    CHECK(cli::run({"simulate", spec_path("problem1.json"), "/nonexistent/params.json"}) ==
          cli::kExitValidation);
}

TEST_CASE("sweep emits the pinned CSV schema with monotone thresholds") {
    TempDir tmp;
    const std::string csv = tmp.file("sweep.csv");
    CerrCapture quiet;
    REQUIRE(cli::run({"sweep", spec_path("problem1.json"), "--param", "c", "--from", "1e-6",
                      "--to", "1000", "--points", "24", "--out", csv}) == cli::kExitOk);
    const auto rows = read_csv(csv);
    REQUIRE(rows.size() == 25);
    REQUIRE(rows[0] == std::vector<std::string>{"c", "xbar1", "xbar2", "xstar1", "xstar2"});
    double prev2 = -1e300, prev1 = 1e300;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const double b1 = std::stod(rows[i][1]);
        const double b2 = std::stod(rows[i][2]);
        CHECK(b2 > prev2);
        CHECK(b1 < prev1);
        prev2 = b2;
        prev1 = b1;
    }
    // near-zero cost end: the whole region collapses toward the midpoint
    CHECK(std::abs(std::stod(rows[1][1])) < 1e-2);
    CHECK(std::abs(std::stod(rows[1][2])) < 1e-2);
    CHECK(std::abs(std::stod(rows[1][3])) < 1e-2);
    CHECK(std::abs(std::stod(rows[1][4])) < 1e-2);
}

TEST_CASE("sweep toward the fixed-gain boundary closes the ping-pong gap") {
    TempDir tmp;
    const std::string csv = tmp.file("sweep2.csv");
    CerrCapture quiet;
    REQUIRE(cli::run({"sweep", spec_path("problem2.json"), "--param", "c", "--from",
                      "50.000001", "--to", "200", "--points", "10", "--out", csv}) ==
            cli::kExitOk);
    const auto rows = read_csv(csv);
    const double xbar2 = std::stod(rows[1][2]);
    const double xstar1 = std::stod(rows[1][3]);
    CHECK(std::abs(xstar1 - xbar2) < 1e-3);
}

TEST_CASE("sweep warm-starts the numeric solver on non-symmetric specs") {
    TempDir tmp;
    const std::string csv = tmp.file("cubic_sweep.csv");
    CerrCapture quiet;
    REQUIRE(cli::run({"sweep", spec_path("cubic.json"), "--param", "c", "--from", "40",
                      "--to", "80", "--points", "5", "--out", csv}) == cli::kExitOk);
    const auto rows = read_csv(csv);
    REQUIRE(rows.size() == 6);
    double prev = -1e300;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const double b2 = std::stod(rows[i][2]);
        CHECK(b2 > prev);
        prev = b2;
    }
    // the c = 60 row is the bundled cubic game
    CHECK(std::stod(rows[3][0]) == Catch::Approx(60.0));
    CHECK(std::stod(rows[3][2]) == Catch::Approx(0.464).margin(1e-2));
}

TEST_CASE("sweep validates the grid range") {
    CerrCapture quiet;
    CHECK(cli::run({"sweep", spec_path("problem2.json"), "--param", "c", "--from", "10",
                    "--to", "100", "--points", "5"}) == cli::kExitValidation);
    CHECK(cli::run({"sweep", spec_path("problem1.json"), "--param", "sigma", "--from", "1",
                    "--to", "2", "--points", "3"}) == cli::kExitValidation);
}

TEST_CASE("sweep value columns sample both value functions") {
    TempDir tmp;
    const std::string csv = tmp.file("values.csv");
    CerrCapture quiet;
    REQUIRE(cli::run({"sweep", spec_path("problem1.json"), "--param", "c", "--from", "100",
                      "--to", "250", "--points", "2", "--values", "3", "--x-from", "-3",
                      "--x-to", "3", "--out", csv}) == cli::kExitOk);
    const auto rows = read_csv(csv);
    REQUIRE(rows[0].size() == 5 + 6);
    CHECK(rows[0][5] == "V1@-3");
    CHECK(rows[0][10] == "V2@3");
    // c = 100 row, V2 at x = 0: closed-form value
    CHECK(std::stod(rows[1][9]) == Catch::Approx(147.17724551503773).epsilon(1e-9));
}

TEST_CASE("inverted-cost specs load only with the override flag") {
    TempDir tmp;
    const std::string inverted = tmp.file("inverted.json");
    {
        nlohmann::json j = load_json_file(spec_path("linear_cubic.json"));
        j["costs"]["c_tilde"] = 50.0;
        std::ofstream os(inverted);
        os << j.dump();
    }
    const std::string params = tmp.file("params.json");
    CerrCapture quiet;
    REQUIRE(cli::run({"solve", spec_path("linear_cubic.json"), "--out", params}) == cli::kExitOk);

    CHECK(cli::run({"verify", inverted, params}) == cli::kExitValidation);
    // with the flag the spec loads; the tuple is of course no equilibrium there
    std::ostringstream sink;
    auto* old = std::cout.rdbuf(sink.rdbuf());
    const int rc = cli::run({"verify", inverted, params, "--allow-inverted-costs"});
    std::cout.rdbuf(old);
    CHECK(rc == cli::kExitCertificationFailed);
}

TEST_CASE("unknown subcommands and missing arguments fail parsing") {
    CerrCapture quiet;
    std::ostringstream sink;
    auto* old = std::cout.rdbuf(sink.rdbuf());
    const int rc1 = cli::run({"frobnicate"});
    const int rc2 = cli::run({"solve"});
    std::cout.rdbuf(old);
    CHECK(rc1 != cli::kExitOk);
    CHECK(rc2 != cli::kExitOk);
}
