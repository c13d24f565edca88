#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "msd/cli.hpp"

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    args.insert(args.begin(), "msd");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = msd::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
}

const std::string kTwoPoint = "mix:0.5@-1@0,0.5@1@0";

}  // namespace

TEST_CASE("survival csv") {
    const auto a = run({"survival", "--measure", kTwoPoint, "--snr", "1.5", "--samples", "20000", "--seed", "4"});
    REQUIRE(a.code == 0);
    const auto rows = lines(a.out);
    REQUIRE(rows.size() > 3);
    CHECK(rows[0].rfind("# seed=4, n=20000, spec=" + kTwoPoint, 0) == 0);
    CHECK(rows[1] == "u,s");
    CHECK(rows[2] == "0,1");

    const auto b = run({"survival", "--measure", kTwoPoint, "--snr", "1.5", "--samples", "20000", "--seed", "4"});
    CHECK(a.out == b.out);
    const auto c = run({"survival", "--measure", kTwoPoint, "--snr", "1.5", "--samples", "20000", "--seed", "5"});
    CHECK(a.out != c.out);

    const auto banded = run({"survival", "--measure", kTwoPoint, "--snr", "1.5", "--samples", "20000", "--bands",
                             "--u-grid", "0:1:0.25"});
    REQUIRE(banded.code == 0);
    CHECK(lines(banded.out)[1] == "u,s,s_lo,s_hi");
    CHECK(lines(banded.out).size() == 2 + 5);
}

TEST_CASE("survival json") {
    const auto r = run({"survival", "--measure", "unif:-1,1", "--snr", "2", "--samples", "10000", "--format", "json",
                        "--u-grid", "0:1:0.5"});
    REQUIRE(r.code == 0);
    const auto doc = nlohmann::json::parse(r.out);
    CHECK(doc["config"]["n"] == 10000);
    CHECK(doc["config"]["spec"] == "unif:-1,1");
    REQUIRE(doc["rows"].size() == 3);
    CHECK(doc["rows"][0]["u"] == 0.0);
}

TEST_CASE("complexity and zeta") {
    const auto cx = run({"complexity", "--measure", kTwoPoint, "--snr", "1.5", "--samples", "10000"});
    REQUIRE(cx.code == 0);
    const auto cx_rows = lines(cx.out);
    REQUIRE(cx_rows.size() == 3);
    CHECK(cx_rows[1] == "r,m_star,delta_star");
    CHECK(cx_rows[2].rfind("1.5,", 0) == 0);

    const auto z = run({"zeta", "--measure", "mix:1@0@0", "--t-grid", "0.5:0.5:0.1", "--M-list", "1,inf",
                        "--samples", "10000", "--format", "json"});
    REQUIRE(z.code == 0);
    const auto doc = nlohmann::json::parse(z.out);
    REQUIRE(doc["rows"].size() == 2);
    CHECK(doc["rows"][1]["M"] == "inf");
    CHECK(doc["rows"][1]["zeta_star"].get<double>() == doctest::Approx(1.0 / (1.0 - std::exp(-1.0))));
}

TEST_CASE("simulate writes its files") {
    const auto dir = std::filesystem::temp_directory_path() / "msd_cli_simulate_test";
    std::filesystem::remove_all(dir);
    const std::vector<std::string> args{"simulate", "--mu",        kTwoPoint, "--nu",  "mix:1@0@1", "--steps",
                                        "20",       "--eta",       "0.05",    "--particles", "500", "--seed",
                                        "2",        "--out",       dir.string()};
    const auto r = run(args);
    REQUIRE(r.code == 0);
    for (const char* name : {"chain.csv", "mu0.csv", "nu0.csv", "nu_diffused.csv", "recovered.csv"}) {
        CHECK(std::filesystem::exists(dir / name));
    }
    const auto chain = lines(slurp(dir / "chain.csv"));
    REQUIRE(chain.size() == 3 + 21);
    CHECK(chain[2] == "k,t,w2_forward,w2_backward");
    const std::string first = slurp(dir / "recovered.csv");
    CHECK(lines(first).size() == 2 + 500);

    REQUIRE(run(args).code == 0);
    CHECK(slurp(dir / "recovered.csv") == first);
    std::filesystem::remove_all(dir);
}

TEST_CASE("verify subset") {
    const auto r = run({"verify", "--suite", "quick", "--criteria", "1"});
    CHECK(r.code == 0);
    CHECK(r.out.find("criterion  1 PASS") != std::string::npos);
}

TEST_CASE("errors and exit codes") {
    const auto bad_spec = run({"survival", "--measure", "mix:0.5@0@1", "--snr", "1"});
    CHECK(bad_spec.code == 1);
    CHECK(bad_spec.err.rfind("error: bad measure spec", 0) == 0);

    CHECK(run({"survival", "--measure", kTwoPoint, "--snr", "1", "--samples", "100"}).code == 1);
    CHECK(run({"survival", "--measure", kTwoPoint, "--snr", "abc"}).code == 1);
    CHECK(run({"survival", "--measure", kTwoPoint}).code == 1);
    CHECK(run({"simulate", "--mu", kTwoPoint, "--nu", kTwoPoint, "--eta", "0.5", "--out", "unused"}).code == 1);
    CHECK(run({"verify", "--criteria", "12"}).code == 1);

    CHECK(run({}).code != 0);
    CHECK(run({"survival", "--no-such-flag"}).code != 0);
    CHECK(run({"verify", "--suite", "medium"}).code != 0);
    CHECK(run({"--help"}).code == 0);
}
