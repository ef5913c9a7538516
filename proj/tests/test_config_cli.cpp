#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>
#include <unistd.h>

#include "ionsim/config.hpp"
#include "ionsim/coupling.hpp"

using namespace ionsim;
using config::Json;

namespace {

namespace fs = std::filesystem;

std::string read_file(const fs::path& path) {
    std::ifstream file(path, std::ios::binary);
    REQUIRE(file.good());
    std::ostringstream text;
    text << file.rdbuf();
    return text.str();
}

fs::path config_dir() {
    const char* dir = std::getenv("IONSIM_CONFIG_DIR");
    REQUIRE(dir != nullptr);
    return fs::path(dir);
}

fs::path scratch_dir() {
    static fs::path dir = [] {
        fs::path d = fs::temp_directory_path() /
                     ("ionsim_test_" + std::to_string(::getpid()));
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

struct CmdResult {
    int exit_code;
    std::string out;
    std::string err;
};

CmdResult run_cli(const std::string& args) {
    const char* bin = std::getenv("IONSIM_BIN");
    REQUIRE(bin != nullptr);
    static int counter = 0;
    const fs::path out = scratch_dir() / ("stdout_" + std::to_string(counter));
    const fs::path err = scratch_dir() / ("stderr_" + std::to_string(counter));
    ++counter;
    const std::string command = std::string(bin) + " " + args + " > " +
                                out.string() + " 2> " + err.string();
    const int status = std::system(command.c_str());
    CmdResult result;
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    result.out = read_file(out);
    result.err = read_file(err);
    return result;
}

std::vector<std::vector<double>> parse_csv(const std::string& text,
                                           std::vector<std::string>& header) {
    std::istringstream in(text);
    std::string line;
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream fields(line);
        std::string field;
        if (header.empty()) {
            while (std::getline(fields, field, ',')) header.push_back(field);
            continue;
        }
        std::vector<double> row;
        while (std::getline(fields, field, ',')) row.push_back(std::stod(field));
        rows.push_back(row);
    }
    return rows;
}

} // namespace

TEST_CASE("config round trip is the identity") {
    for (const char* name : {"moon_8_10.json", "pulse_k4.json", "commensurability.json",
                             "resonance_k1.json", "verify_fast.json"}) {
        const Json document = config::parse_document(read_file(config_dir() / name));
        const auto first = config::load_run_config(document);
        const Json serialized = config::serialize(first);
        const auto second = config::load_run_config(serialized);
        CHECK(config::serialize(second).dump() == serialized.dump());
    }
}

TEST_CASE("config errors carry the field path") {
    SUBCASE("bad axis") {
        const Json j = config::parse_document(R"({"pulse": {"axis": "z"}})");
        try {
            config::load_run_config(j);
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            CHECK(e.path() == "/pulse/axis");
        }
    }
    SUBCASE("unknown step name") {
        const Json j = config::parse_document(
            R"({"protocol": {"initial": {"qubit": "e"}, "steps": [{"pulze": {}}],
                "target": {"M": 1, "N": 2}}})");
        try {
            config::load_run_config(j);
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            CHECK(e.path() == "/protocol/steps/0");
        }
    }
    SUBCASE("physical validation at load time") {
        const Json j = config::parse_document(
            R"({"pulse": {"axis": "x", "model": "effective", "k": 1, "eta": -0.5}})");
        CHECK_THROWS_AS(config::load_run_config(j), ConfigError);
    }
    SUBCASE("ode_tol range") {
        const Json j = config::parse_document(R"({"ode_tol": 1e-3})");
        CHECK_THROWS_AS(config::load_run_config(j), ConfigError);
    }
    SUBCASE("unknown top-level key") {
        const Json j = config::parse_document(R"({"pulze": 1})");
        CHECK_THROWS_AS(config::load_run_config(j), ConfigError);
    }
}

TEST_CASE("dotted-path overrides") {
    Json j = config::parse_document(R"({"dims": {"x": 16}})");
    config::apply_override(j, "dims.y=24");
    config::apply_override(j, "verify.fault_injection=1e-6");
    config::apply_override(j, "run_mode=shared_clock");
    CHECK(j["dims"]["y"] == 24);
    CHECK(j["verify"]["fault_injection"].get<double>() == 1e-6);
    CHECK(j["run_mode"] == "shared_clock");
    CHECK_THROWS_AS(config::apply_override(j, "missing_equals"), ConfigError);
}

TEST_CASE("cli simulate emits the documented series") {
    const fs::path out = scratch_dir() / "pulse_k4.csv";
    const auto res = run_cli("simulate " + (config_dir() / "pulse_k4.json").string() +
                             " --out " + out.string());
    REQUIRE(res.exit_code == 0);
    std::vector<std::string> header;
    const auto rows = parse_csv(read_file(out), header);
    REQUIRE(header.size() == 6);
    CHECK(header[0] == "t");
    CHECK(header[1] == "P_e");
    CHECK(header[2] == "pop_x0");
    CHECK(header[3] == "pop_x4");
    CHECK(header[4] == "norm");
    CHECK(header[5] == "leakage");
    REQUIRE(rows.size() == 401);

    // the first P_e zero sits at the pulse time within one grid step
    const double t0 = coupling::pi_pulse_time(0, coupling::CouplingParams(0.2, 4, 1.0));
    const double grid_step = rows[1][0] - rows[0][0];
    int argmin = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i][1] < rows[argmin][1]) argmin = static_cast<int>(i);
    }
    CHECK(std::abs(rows[argmin][0] - t0) <= grid_step + 1e-9);
    for (const auto& row : rows) {
        CHECK(row[1] >= 0.0);
        CHECK(row[1] <= 1.0 + 1e-12);
        CHECK(std::abs(row[4] - 1.0) <= 1e-9);
    }

    // byte determinism of the emitted file
    const fs::path out2 = scratch_dir() / "pulse_k4_again.csv";
    run_cli("simulate " + (config_dir() / "pulse_k4.json").string() + " --out " +
            out2.string());
    CHECK(read_file(out) == read_file(out2));
}

TEST_CASE("cli simulate with zero coupling keeps P_e at one") {
    // eta = 0 with k > 0 removes every sideband matrix element
    const fs::path out = scratch_dir() / "flat.csv";
    const auto res = run_cli("simulate " + (config_dir() / "pulse_k4.json").string() +
                             " --set pulse.eta=0.0 --set time_grid.samples=20 --out " +
                             out.string());
    REQUIRE(res.exit_code == 0);
    std::vector<std::string> header;
    const auto rows = parse_csv(read_file(out), header);
    for (const auto& row : rows) CHECK(row[1] == 1.0);
}

TEST_CASE("cli simulate pre-RWA schema adds the drift column") {
    const fs::path out = scratch_dir() / "prerwa.csv";
    const auto res = run_cli(
        "simulate " + (config_dir() / "pulse_k4.json").string() +
        " --set pulse.model=full_pre_rwa --set pulse.nu=50.0 --set pulse.k=1" +
        " --set dims.x=8 --set time_grid.t_max=2.0 --set time_grid.samples=10" +
        " --out " + out.string());
    REQUIRE(res.exit_code == 0);
    std::vector<std::string> header;
    parse_csv(read_file(out), header);
    REQUIRE(header.size() == 7);
    CHECK(header[6] == "norm_drift");
}

TEST_CASE("cli protocol reproduces the bundled target") {
    const fs::path out = scratch_dir() / "moon.json";
    const auto res = run_cli("protocol " + (config_dir() / "moon_8_10.json").string() +
                             " --out " + out.string());
    REQUIRE(res.exit_code == 0);
    const Json report = config::parse_document(read_file(out));
    CHECK(report["schema"] == "ionsim-protocol-report/1");
    CHECK(report["fidelity"].get<double>() >= 1.0 - 1e-10);
    CHECK(std::abs(report["relative_branch_phase_rad"].get<double>()) <= 1e-10);
    CHECK(report["components"].size() == 2);

    // shared clock run agrees with the analytic prediction
    const fs::path out2 = scratch_dir() / "moon_shared.json";
    const auto res2 = run_cli("protocol " + (config_dir() / "moon_8_10.json").string() +
                              " --set run_mode=shared_clock --out " + out2.string());
    REQUIRE(res2.exit_code == 0);
    const Json shared = config::parse_document(read_file(out2));
    const auto scan = coupling::commensurability_scan(
        coupling::BranchPair(4, 4, 4), 1.0, coupling::EtaGrid{0.2, 0.2, 1});
    CHECK(std::abs(shared["fidelity"].get<double>() -
                   scan.grid[0].predicted_fidelity) <= 1e-6);
}

TEST_CASE("cli protocol trajectory output") {
    const fs::path out = scratch_dir() / "moon2.json";
    const fs::path traj = scratch_dir() / "moon_traj.json";
    const auto res = run_cli("protocol " + (config_dir() / "moon_8_10.json").string() +
                             " --out " + out.string() + " --trajectory " +
                             traj.string());
    REQUIRE(res.exit_code == 0);
    const Json trajectory = config::parse_document(read_file(traj));
    CHECK(trajectory["states"].size() == 10);
}

TEST_CASE("cli rejects malformed configs with the field path") {
    const fs::path bad = scratch_dir() / "bad.json";
    {
        std::ofstream file(bad);
        file << R"({"protocol": {"initial": {"qubit": "e"}, "steps": [{"pulze": {}}],
                    "target": {"M": 8, "N": 10}}})";
    }
    const auto res = run_cli("protocol " + bad.string());
    CHECK(res.exit_code == 2);
    CHECK(res.err.find("/protocol/steps/0") != std::string::npos);
}

TEST_CASE("cli scan commensurability") {
    SUBCASE("single point grid degenerates to one row") {
        const fs::path out = scratch_dir() / "scan1.json";
        const auto res = run_cli(
            "scan " + (config_dir() / "commensurability.json").string() +
            " --set scan.eta_grid.min=0.2 --set scan.eta_grid.max=0.2" +
            " --set scan.eta_grid.points=1 --set scan.with_full_run=false --out " +
            out.string());
        REQUIRE(res.exit_code == 0);
        const Json report = config::parse_document(read_file(out));
        CHECK(report["rows"].size() == 1);
    }

    SUBCASE("full-run fidelity is maximal at the best row") {
        const fs::path out = scratch_dir() / "scan5.json";
        const auto res = run_cli("scan " +
                                 (config_dir() / "commensurability.json").string() +
                                 " --set scan.eta_grid.points=5 --out " + out.string());
        REQUIRE(res.exit_code == 0);
        const Json report = config::parse_document(read_file(out));
        REQUIRE(report["rows"].size() == 5);
        const int best = report["best_index"].get<int>();
        const double best_full = report["rows"][best]["full_run_fidelity"].get<double>();
        for (const auto& row : report["rows"]) {
            CHECK(best_full >= row["full_run_fidelity"].get<double>() - 1e-12);
            // the scan prediction matches the replayed sequence pointwise
            CHECK(std::abs(row["full_run_fidelity"].get<double>() -
                           row["predicted_fidelity"].get<double>()) <= 1e-6);
        }
        CHECK(report["any_predicted_fidelity_ge_0.999"] == false);
    }

    SUBCASE("empty grid is a usage error") {
        const auto res = run_cli("scan " +
                                 (config_dir() / "commensurability.json").string() +
                                 " --set scan.eta_grid.points=0");
        CHECK(res.exit_code == 2);
    }

    SUBCASE("grid parallelism does not change the output bytes") {
        const fs::path serial = scratch_dir() / "scan_serial.json";
        const fs::path threaded = scratch_dir() / "scan_threaded.json";
        const std::string args =
            "scan " + (config_dir() / "commensurability.json").string() +
            " --set scan.eta_grid.points=8 --out ";
        run_cli(args + serial.string());
        const int status = std::system(("IONSIM_THREADS=4 " +
                                        std::string(std::getenv("IONSIM_BIN")) + " " +
                                        args + threaded.string() + " > /dev/null 2>&1")
                                           .c_str());
        REQUIRE(WIFEXITED(status));
        REQUIRE(WEXITSTATUS(status) == 0);
        CHECK(read_file(serial) == read_file(threaded));
    }
}

TEST_CASE("cli scan resonance finds the carrier at zero detuning") {
    const fs::path out = scratch_dir() / "res.json";
    const auto res = run_cli(
        "scan " + (config_dir() / "resonance_k1.json").string() +
        " --set scan.pulse.k=0 --set scan.pulse.nu=30.0" +
        " --set scan.delta_grid.min=-15.0 --set scan.delta_grid.max=15.0" +
        " --set scan.delta_grid.points=11 --set scan.mode_dim=6" +
        " --set scan.samples=24 --set scan.tol=1e-7 --out " + out.string());
    REQUIRE(res.exit_code == 0);
    const Json report = config::parse_document(read_file(out));
    CHECK(report["peak_delta"].get<double>() == 0.0);
}

TEST_CASE("cli verify smoke run, determinism and fault injection") {
    const fs::path cfg = config_dir() / "verify_fast.json";
    const fs::path out1 = scratch_dir() / "verify1.json";
    const fs::path out2 = scratch_dir() / "verify2.json";
    const auto res1 = run_cli("verify " + cfg.string() + " --out " + out1.string());
    REQUIRE(res1.exit_code == 0);
    CHECK(res1.out.find("all checks passed") != std::string::npos);
    const auto res2 = run_cli("verify " + cfg.string() + " --out " + out2.string());
    REQUIRE(res2.exit_code == 0);
    CHECK(read_file(out1) == read_file(out2));

    const auto faulty = run_cli("verify " + cfg.string() +
                                " --set verify.fault_injection=1e-6");
    CHECK(faulty.exit_code == 1);
    CHECK(faulty.out.find("[FAIL] analytic_numeric_equivalence") != std::string::npos);

    // a tolerance tightened below the achievable precision must take effect
    const auto tightened = run_cli("verify " + cfg.string() +
                                   " --set verify.equivalence_tol=1e-18");
    CHECK(tightened.exit_code == 1);
}
