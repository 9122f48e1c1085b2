#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

// End-to-end checks of the installed command-line interface. The binary path
// comes from the build system.

namespace {

struct RunResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

RunResult run(const std::string& args) {
    static int counter = 0;
    const std::string base = "/tmp/hodoflow_cli_" + std::to_string(counter++);
    const std::string cmd =
        std::string(HODOFLOW_BIN) + " " + args + " >" + base + ".out 2>" + base + ".err";
    const int rc = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WEXITSTATUS(rc);
    r.out = slurp(base + ".out");
    r.err = slurp(base + ".err");
    std::remove((base + ".out").c_str());
    std::remove((base + ".err").c_str());
    return r;
}

std::vector<std::string> lines(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string line;
    while (std::getline(ss, line)) out.push_back(line);
    return out;
}

std::vector<double> csv_row(const std::string& line) {
    std::vector<double> out;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::strtod(tok.c_str(), nullptr));
    return out;
}

}  // namespace

TEST_CASE("geodesic command traces the equator") {
    const RunResult r =
        run("geodesic --chart sphere2 --R 1 --init 1.5707963267948966,0,0,1 --t-end "
            "3.14159265358979");
    CHECK(r.exit_code == 0);
    const auto ls = lines(r.out);
    REQUIRE(ls.size() >= 3);
    CHECK(ls[0] == "t,theta,phi,u,v,H,L1,L2,L3,I1,I2");
    const auto last = csv_row(ls.back());
    CHECK(last[1] == doctest::Approx(1.5707963267948966).epsilon(1e-9));
    CHECK(last[2] == doctest::Approx(3.14159265358979).epsilon(1e-9));
}

TEST_CASE("geodesic command on a radial cone line") {
    const RunResult r = run("geodesic --chart cone --alpha 0.25 --init 1,0,1,0 --t-end 2");
    CHECK(r.exit_code == 0);
    const auto last = csv_row(lines(r.out).back());
    CHECK(last[1] == doctest::Approx(3.0).epsilon(1e-9));
}

TEST_CASE("missing --alpha for the cone is a config error") {
    const RunResult r = run("geodesic --chart cone --init 1,0,1,0 --t-end 2");
    CHECK(r.exit_code == 1);
    CHECK(r.err.find("alpha") != std::string::npos);
}

TEST_CASE("boundary hits exit with the partial-result code") {
    const RunResult r = run("geodesic --chart cone --alpha 0.25 --init 1,0,-1,0 --t-end 2");
    CHECK(r.exit_code == 2);
    CHECK(!lines(r.out).empty());  // trajectory still written
}

TEST_CASE("field command writes the documented CSV schema") {
    const RunResult r = run(
        "field --chart sphere2 --family s2_stat_linear --params '{\"a1\":1.0}' "
        "--grid theta=0.5:1.0:3 --grid phi=0:1:3 --out /tmp/hodoflow_field_test.csv");
    CHECK(r.exit_code == 0);
    const auto ls = lines(slurp("/tmp/hodoflow_field_test.csv"));
    REQUIRE(ls.size() == 10);  // header + 9 nodes
    CHECK(ls[0] == "theta,phi,u,v,valid");
    CHECK(r.out.find("\"nodes\":9") != std::string::npos);
    CHECK(r.out.find("\"valid\":9") != std::string::npos);
    std::remove("/tmp/hodoflow_field_test.csv");
}

TEST_CASE("field command on the documented 100x100 example") {
    const RunResult r = run(
        "field --chart sphere2 --family s2_stat_linear --params '{\"a1\":1.0}' "
        "--grid theta=0.4:1.2:100 --grid phi=0:6.2:100 --out /tmp/hodoflow_field_big.csv");
    CHECK(r.exit_code == 0);
    const auto ls = lines(slurp("/tmp/hodoflow_field_big.csv"));
    CHECK(ls.size() == 10001);  // header + 1e4 rows
    CHECK(r.out.find("\"valid\":10000") != std::string::npos);  // grid avoids the blow-up circle
    std::remove("/tmp/hodoflow_field_big.csv");
}

TEST_CASE("field command solves hodograph systems, tabulated parameters included") {
    const RunResult r = run(
        "field --chart sphere2 --family s2_stationary "
        "--params '{\"F1\":{\"type\":\"tabulated\",\"x\":[-3,-1,1,3],\"y\":[-0.1,0.5,1.1,1.7]},"
        "\"F2\":{\"type\":\"constant\",\"value\":0.0}}' "
        "--grid theta=0.6:1.0:4 --grid phi=0.2:1.2:4 --seed-guess 0.2,0.5");
    CHECK(r.exit_code == 0);
    const auto ls = lines(r.out);
    REQUIRE(ls.size() >= 2);
    CHECK(ls[0] == "theta,phi,u,v,valid");  // same schema as the family mode
}

TEST_CASE("field command emits the JSON format on request") {
    const RunResult r = run(
        "field --chart sphere2 --family s2_stat_linear --params '{\"a1\":1.0}' "
        "--grid theta=0.5:1.0:3 --grid phi=0:1:3 --format json "
        "--out /tmp/hodoflow_field_test.json");
    CHECK(r.exit_code == 0);
    const std::string body = slurp("/tmp/hodoflow_field_test.json");
    CHECK(body.find("\"chart\": \"sphere2\"") != std::string::npos);
    CHECK(body.find("\"axes\"") != std::string::npos);
    CHECK(body.find("\"values\"") != std::string::npos);
    CHECK(body.find("\"valid\"") != std::string::npos);
    std::remove("/tmp/hodoflow_field_test.json");
}

TEST_CASE("grids touching the coordinate singularities are rejected") {
    const RunResult r = run(
        "field --chart sphere2 --family s2_stat_linear --params '{\"a1\":1.0}' "
        "--grid theta=0:1:4 --grid phi=0:1:4");
    CHECK(r.exit_code == 1);
    CHECK(r.err.find("theta") != std::string::npos);
}

TEST_CASE("blowup command emits the equator polyline") {
    const RunResult r = run(
        "blowup --chart sphere2 --family s2_stat_linear --params '{\"a1\":0.8,\"a2\":0.5}' "
        "--grid theta=1.0:2.1:40 --grid phi=0.1:6.1:40 --refine-tol 1e-7 "
        "--out /tmp/hodoflow_blowup_test.csv");
    CHECK(r.exit_code == 0);
    const auto ls = lines(slurp("/tmp/hodoflow_blowup_test.csv"));
    REQUIRE(ls.size() > 10);
    CHECK(ls[0] == "segment,theta,phi,det_m");
    for (size_t i = 1; i < ls.size(); ++i) {
        const auto row = csv_row(ls[i]);
        CHECK(std::abs(row[1] - 1.5707963267948966) < 1e-6);
    }
    std::remove("/tmp/hodoflow_blowup_test.csv");
}

TEST_CASE("an empty blow-up locus is exit 0 with a header-only file") {
    const RunResult r = run(
        "blowup --chart sphere2 --family s2_stat_linear --params '{\"a1\":0.8,\"a2\":0.5}' "
        "--grid theta=0.3:1.2:20 --grid phi=0.1:6.1:20 --out /tmp/hodoflow_blowup_empty.csv");
    CHECK(r.exit_code == 0);
    const auto ls = lines(slurp("/tmp/hodoflow_blowup_empty.csv"));
    REQUIRE(ls.size() == 1);
    CHECK(ls[0] == "segment,theta,phi,det_m");
    std::remove("/tmp/hodoflow_blowup_empty.csv");
}

TEST_CASE("verify command gates on the residual threshold") {
    const RunResult good = run(
        "verify --chart sphere2 --family s2_stat_linear "
        "--params '{\"a1\":0.8,\"a2\":0.5,\"b1\":0.3,\"b2\":-0.2}' "
        "--grid theta=0.5:1.0:12 --grid phi=0.3:1.3:12 --fd-step 1e-4 --threshold 1e-5");
    CHECK(good.exit_code == 0);
    CHECK(good.out.find("\"max\"") != std::string::npos);
    CHECK(good.out.find("\"fd_step\"") != std::string::npos);

    // the legacy variant is not a solution: the oracle must catch it
    const RunResult bad = run(
        "verify --chart cone --alpha 0.36 --family cone_linear "
        "--params '{\"a1\":2.0,\"b1\":1.0,\"a2\":0.3,\"legacy_variant\":true}' "
        "--t 0.4 --grid r=1.0:2.0:12 --grid phi=0.3:1.3:12 --threshold 1e-5");
    CHECK(bad.exit_code == 3);
}

TEST_CASE("stationary flag on a time-dependent family warns and keeps d/dt") {
    const RunResult r = run(
        "verify --chart cone --alpha 0.36 --family cone_linear "
        "--params '{\"a1\":2.0,\"b1\":1.0,\"a2\":0.3}' --t 0.4 "
        "--grid r=1.0:2.0:10 --grid phi=0.3:1.3:10 --threshold 1e-5 --stationary");
    CHECK(r.exit_code == 0);  // FD d/dt kept, field is a solution
    CHECK(r.err.find("warning") != std::string::npos);
}

TEST_CASE("config file mirrors the flags and flags win") {
    {
        std::ofstream cfg("/tmp/hodoflow_cfg_test.json");
        cfg << R"({"chart": "sphere2", "family": "s2_stat_linear",
                   "params": "{\"a1\": 1.0}",
                   "grid": ["theta=0.5:1.0:3", "phi=0:1:3"]})";
    }
    const RunResult r = run("field --config /tmp/hodoflow_cfg_test.json");
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("\"nodes\":9") != std::string::npos);

    // a flag on the command line overrides the config value
    const RunResult r2 =
        run("field --config /tmp/hodoflow_cfg_test.json --grid theta=0.5:1.0:2 --grid phi=0:1:2");
    CHECK(r2.exit_code == 0);
    CHECK(r2.out.find("\"nodes\":4") != std::string::npos);
    std::remove("/tmp/hodoflow_cfg_test.json");
}

TEST_CASE("field and verify outputs are byte-identical across worker counts") {
    const std::string field_args =
        "field --chart sphere2 --family s2_stationary "
        "--params '{\"F1\":{\"type\":\"linear\",\"a\":0.8,\"b\":0.3},"
        "\"F2\":{\"type\":\"linear\",\"a\":0.5,\"b\":-0.2}}' "
        "--grid theta=0.4:1.2:30 --grid phi=0:6.2:30 --seed-guess 0.2,0.5 ";
    const RunResult f1 = run(field_args + "--workers 1 --out /tmp/hodoflow_det_w1.csv");
    const RunResult f4 = run(field_args + "--workers 4 --out /tmp/hodoflow_det_w4.csv");
    CHECK(f1.exit_code == 0);
    CHECK(f4.exit_code == 0);
    CHECK(slurp("/tmp/hodoflow_det_w1.csv") == slurp("/tmp/hodoflow_det_w4.csv"));
    std::remove("/tmp/hodoflow_det_w1.csv");
    std::remove("/tmp/hodoflow_det_w4.csv");
}
