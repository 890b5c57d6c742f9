#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

#include <nlohmann/json.hpp>

#ifndef IPSTAB_CLI_BIN
#error "IPSTAB_CLI_BIN must point at the built command line binary"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunResult {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Each invocation gets its own scratch directory so parallel test runs and
// repeated invocations cannot collide on capture files.
RunResult run_cli(const std::string& args) {
    static int counter = 0;
    const fs::path dir =
        fs::temp_directory_path() / ("ipstab_cli_" + std::to_string(::getpid())) /
        std::to_string(counter++);
    fs::create_directories(dir);
    const fs::path out = dir / "stdout.txt";
    const fs::path err = dir / "stderr.txt";

    const std::string cmd = std::string(IPSTAB_CLI_BIN) + " " + args + " > " + out.string() +
                            " 2> " + err.string();
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

fs::path scratch_dir(const char* tag) {
    const fs::path dir = fs::temp_directory_path() /
                         ("ipstab_cli_ws_" + std::to_string(::getpid())) / tag;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

fs::path write_config(const fs::path& dir, const char* name, const std::string& body) {
    const fs::path p = dir / name;
    std::ofstream out(p, std::ios::binary);
    out << body;
    return p;
}

const std::string kStable = R"({
    "plant": {"alpha": [1.0, -1.0], "beta": [2.0]},
    "controller": {"alpha": 0.01, "k": 1.0, "tau": 0.1},
    "simulation": {"horizon": 4.0},
    "tune": {"theta_grid": [0.01, 0.1], "k_grid": [1.0, 3.0]}
})";

const std::string kAdvanced = R"({
    "plant": {"alpha": [1.0, -1.0], "beta": [1.0]},
    "controller": {"alpha": -1.0, "k": 100.0, "tau": 0.01}
})";

const std::string kUndelayed = R"({
    "plant": {"alpha": [1.0, 3.0], "beta": [2.0]},
    "controller": {"alpha": -2.0, "k": 3.0, "tau": 0.1}
})";

} // namespace

TEST_CASE("analyze succeeds, prints JSON, and writes the same bytes to disk") {
    const fs::path dir = scratch_dir("analyze");
    const fs::path cfg = write_config(dir, "cfg.json", kStable);

    const RunResult r = run_cli("analyze --config " + cfg.string() + " --out " + dir.string());
    CAPTURE(r.err);
    REQUIRE(r.code == 0);

    const json doc = json::parse(r.out);
    CHECK(doc.at("status") == "ExponentiallyStable");
    CHECK(doc.at("meta").at("tool") == "ipstab");

    CHECK(slurp(dir / "analyze.json") == r.out);
}

TEST_CASE("verdict is data: unstable plants still exit zero") {
    const fs::path dir = scratch_dir("analyze_adv");
    const fs::path cfg = write_config(dir, "cfg.json", kAdvanced);

    const RunResult r = run_cli("analyze --config " + cfg.string() + " --out " + dir.string());
    REQUIRE(r.code == 0);
    const json doc = json::parse(r.out);
    CHECK(doc.at("status") == "Unstable");
    CHECK(doc.at("reason") == "AdvancedType");
    CHECK(doc.at("certificate").is_object());
}

TEST_CASE("identical configs produce byte-identical outputs") {
    const fs::path dir = scratch_dir("determinism");
    const fs::path cfg = write_config(dir, "cfg.json", kStable);
    const fs::path out_a = dir / "a";
    const fs::path out_b = dir / "b";

    for (const char* sub : {"analyze", "simulate", "tune"}) {
        const RunResult r1 =
            run_cli(std::string(sub) + " --config " + cfg.string() + " --out " + out_a.string());
        const RunResult r2 =
            run_cli(std::string(sub) + " --config " + cfg.string() + " --out " + out_b.string());
        REQUIRE(r1.code == 0);
        REQUIRE(r2.code == 0);
        CHECK(r1.out == r2.out);
    }

    CHECK(slurp(out_a / "analyze.json") == slurp(out_b / "analyze.json"));
    CHECK(slurp(out_a / "summary.json") == slurp(out_b / "summary.json"));
    CHECK(slurp(out_a / "trajectory.csv") == slurp(out_b / "trajectory.csv"));
    CHECK(slurp(out_a / "tune.json") == slurp(out_b / "tune.json"));
}

TEST_CASE("simulate writes a summary and a trajectory with the documented header") {
    const fs::path dir = scratch_dir("simulate");
    const fs::path cfg = write_config(dir, "cfg.json", kStable);

    const RunResult r = run_cli("simulate --config " + cfg.string() + " --out " + dir.string());
    CAPTURE(r.err);
    REQUIRE(r.code == 0);

    const json doc = json::parse(r.out);
    CHECK(doc.at("integrator") == "loop");
    CHECK(doc.at("fit").at("classification") == "Decaying");

    const std::string csv = slurp(dir / "trajectory.csv");
    CHECK(csv.rfind("t,y,u,F,Fhat\n", 0) == 0);
    const auto rows = static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n'));
    CHECK(rows == doc.at("samples").get<std::size_t>() + 1);
}

TEST_CASE("simulate accepts step, horizon, and integrator overrides") {
    const fs::path dir = scratch_dir("overrides");
    const fs::path cfg = write_config(dir, "cfg.json", kStable);

    const RunResult r = run_cli("simulate --config " + cfg.string() + " --out " + dir.string() +
                                " --step 0.002 --horizon 1.0 --force-integrator neutral");
    CAPTURE(r.err);
    REQUIRE(r.code == 0);
    const json doc = json::parse(r.out);
    CHECK(doc.at("integrator") == "neutral");
    CHECK(doc.at("horizon").get<double>() == 1.0);
    CHECK(doc.at("step").get<double>() == Catch::Approx(0.002));

    const RunResult s = run_cli("simulate --config " + cfg.string() + " --out " + dir.string() +
                                " --force-integrator sampled");
    REQUIRE(s.code == 0);
    CHECK(json::parse(s.out).at("integrator") == "sampled");

    const RunResult bad = run_cli("simulate --config " + cfg.string() + " --out " + dir.string() +
                                  " --force-integrator rk7");
    CHECK(bad.code == 2);
}

TEST_CASE("roots writes chain estimates with the documented header") {
    const fs::path dir = scratch_dir("roots");
    const fs::path cfg = write_config(dir, "cfg.json", R"({
        "plant": {"alpha": [1.0, -1.0], "beta": [1.0]},
        "controller": {"alpha": -2.0, "k": 10.0, "tau": 0.01},
        "analysis": {"k_min": -5, "k_max": 5}
    })");

    const RunResult r = run_cli("roots --config " + cfg.string() + " --out " + dir.string());
    CAPTURE(r.err);
    REQUIRE(r.code == 0);

    const json doc = json::parse(r.out);
    CHECK(doc.at("rows").get<int>() == 11);
    CHECK(doc.at("real_limit").get<double>() == Catch::Approx(69.31471805599453));

    const std::string csv = slurp(dir / "chains.csv");
    CHECK(csv.rfind("k,estimate_re,estimate_im,refined_re,refined_im,residual\n", 0) == 0);
    CHECK(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')) == 12);
}

TEST_CASE("tune emits the grid verdicts and the selected point") {
    const fs::path dir = scratch_dir("tune");
    const fs::path cfg = write_config(dir, "cfg.json", kStable);

    const RunResult r = run_cli("tune --config " + cfg.string() + " --out " + dir.string());
    CAPTURE(r.err);
    REQUIRE(r.code == 0);
    const json doc = json::parse(r.out);
    CHECK(doc.at("points").size() == 4);
    CHECK(doc.at("feasible_count").get<int>() >= 1);
    CHECK(fs::exists(dir / "tune.json"));
}

TEST_CASE("configuration and usage problems exit with code 2") {
    const fs::path dir = scratch_dir("errors2");

    SECTION("missing required option") {
        const RunResult r = run_cli("analyze");
        CHECK(r.code == 2);
    }
    SECTION("no subcommand") {
        const RunResult r = run_cli("");
        CHECK(r.code == 2);
    }
    SECTION("unknown subcommand") {
        const RunResult r = run_cli("frobnicate --config x.json");
        CHECK(r.code == 2);
    }
    SECTION("nonexistent config file") {
        const RunResult r = run_cli("analyze --config " + (dir / "missing.json").string());
        CHECK(r.code == 2);
        CHECK(r.err.rfind("ipstab:", 0) == 0);
    }
    SECTION("malformed JSON") {
        const fs::path cfg = write_config(dir, "broken.json", "{\"plant\": [");
        const RunResult r = run_cli("analyze --config " + cfg.string());
        CHECK(r.code == 2);
        CHECK(r.err.rfind("ipstab:", 0) == 0);
    }
    SECTION("unknown config key") {
        const fs::path cfg = write_config(dir, "unknown.json", R"({
            "plant": {"alpha": [1.0, -1.0], "beta": [2.0]},
            "controller": {"alpha": 0.01, "k": 1.0, "tau": 0.1},
            "extras": {}
        })");
        const RunResult r = run_cli("analyze --config " + cfg.string());
        CHECK(r.code == 2);
    }
    SECTION("tune without a tune section") {
        const fs::path cfg = write_config(dir, "notune.json", kAdvanced);
        const RunResult r = run_cli("tune --config " + cfg.string());
        CHECK(r.code == 2);
        CHECK(r.err.find("tune") != std::string::npos);
    }
    SECTION("roots on a non-neutral closed loop") {
        const fs::path cfg = write_config(dir, "adv.json", kAdvanced);
        const RunResult r = run_cli("roots --config " + cfg.string());
        CHECK(r.code == 2);
    }
}

TEST_CASE("numeric failures exit with code 3") {
    const fs::path dir = scratch_dir("errors3");
    const fs::path cfg = write_config(dir, "undelayed.json", kUndelayed);

    const RunResult r = run_cli("simulate --config " + cfg.string() + " --out " + dir.string());
    CHECK(r.code == 3);
    CHECK(r.err.rfind("ipstab:", 0) == 0);
    CHECK_FALSE(fs::exists(dir / "summary.json"));
}

TEST_CASE("help requests exit zero") {
    const RunResult top = run_cli("--help");
    CHECK(top.code == 0);
    CHECK(top.out.find("analyze") != std::string::npos);

    const RunResult sub = run_cli("simulate --help");
    CHECK(sub.code == 0);
    CHECK(sub.out.find("--force-integrator") != std::string::npos);

    const RunResult ver = run_cli("--version");
    CHECK(ver.code == 0);
    CHECK(ver.out.find("0.1.0") != std::string::npos);
}

TEST_CASE("output directory is created on demand") {
    const fs::path dir = scratch_dir("mkdirs");
    const fs::path cfg = write_config(dir, "cfg.json", kStable);
    const fs::path nested = dir / "deep" / "nested" / "out";

    const RunResult r = run_cli("analyze --config " + cfg.string() + " --out " + nested.string());
    REQUIRE(r.code == 0);
    CHECK(fs::exists(nested / "analyze.json"));
}

TEST_CASE("output dir from the config file is honored when no flag is given") {
    const fs::path dir = scratch_dir("cfg_out");
    const fs::path target = dir / "from_config";
    std::string body = kStable;
    body.insert(body.rfind('}'), ",\n  \"output\": {\"dir\": \"" + target.string() + "\"}\n");
    const fs::path cfg = write_config(dir, "cfg.json", body);

    const RunResult r = run_cli("analyze --config " + cfg.string());
    CAPTURE(r.err);
    REQUIRE(r.code == 0);
    CHECK(fs::exists(target / "analyze.json"));
}
