#include <doctest.h>

#include <json.hpp>

#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>
#include <sys/wait.h>
#include <vector>

namespace {

using nlohmann::json;

std::string bin_path() {
    const char* p = std::getenv("CYLFIT_BIN_PATH");
    REQUIRE_MESSAGE(p != nullptr, "CYLFIT_BIN_PATH must point at the command-line binary");
    return p;
}

std::string temp_dir() {
    const char* t = std::getenv("TMPDIR");
    return t ? t : "/tmp";
}

struct RunResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

RunResult run_cli(const std::string& args) {
    static int counter = 0;
    const std::string err_path =
        temp_dir() + "/cylfit_cli_stderr_" + std::to_string(counter++) + ".txt";
    const std::string cmd = bin_path() + " " + args + " 2>" + err_path;

    RunResult res;
    std::FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::array<char, 4096> buf{};
    std::size_t got = 0;
    while ((got = std::fread(buf.data(), 1, buf.size(), pipe)) > 0)
        res.out.append(buf.data(), got);
    const int status = pclose(pipe);
    res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;

    std::ifstream ef(err_path);
    res.err.assign(std::istreambuf_iterator<char>(ef), std::istreambuf_iterator<char>());
    std::remove(err_path.c_str());
    return res;
}

std::string write_fixture(const std::string& name, const std::string& content) {
    const std::string path = temp_dir() + "/" + name;
    std::ofstream f(path);
    REQUIRE(f.good());
    f << content;
    return path;
}

std::string tetra_csv() {
    return write_fixture("cylfit_cli_tetra.csv", "1,1,1\n1,-1,-1\n-1,1,-1\n-1,-1,1\n");
}

std::string bipyramid_csv(double h) {
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "0,0,%.17g\n0,0,%.17g\n1,0,0\n-0.5,%.17g,0\n-0.5,%.17g,0\n", h, -h,
                  std::sqrt(3.0) / 2.0, -std::sqrt(3.0) / 2.0);
    return write_fixture("cylfit_cli_bipyr.csv", buf);
}

json parse_doc(const std::string& text) {
    json j = json::parse(text);
    REQUIRE(j.is_object());
    return j;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("help exits zero and shows the subcommands") {
    const RunResult res = run_cli("--help");
    CHECK(res.exit_code == 0);
    for (const char* sub : {"fit", "circ4", "circ5", "enclose", "verify"})
        CHECK(res.out.find(sub) != std::string::npos);
}

TEST_CASE("circ4 on the tetrahedron: two radius families, global minimum first") {
    const RunResult res = run_cli("circ4 " + tetra_csv());
    REQUIRE(res.exit_code == 0);
    const json j = parse_doc(res.out);

    CHECK(j["command"] == "circ4");
    CHECK(j["input_summary"]["n"] == 4);
    REQUIRE(j["cylinders"].size() == 9);

    int n_sqrt2 = 0, n_edge = 0;
    for (const auto& c : j["cylinders"]) {
        const double rho = c["radius"].get<double>();
        if (std::abs(rho - std::sqrt(2.0)) <= 1e-8) {
            ++n_sqrt2;
            CHECK(c["is_local_min"] == true);
        } else {
            CHECK(rho == doctest::Approx(1.5).epsilon(1e-10));
            ++n_edge;
            CHECK(c["is_local_min"] == false);
        }
        CHECK(c["objective"].get<double>() ==
              doctest::Approx(4.0 * rho * rho).epsilon(1e-9));
    }
    CHECK(n_sqrt2 == 3);
    CHECK(n_edge == 6);
    CHECK(j["diagnostics"]["global_min_index"] == 0);
    CHECK(j["cylinders"][0]["radius"].get<double>() ==
          doctest::Approx(std::sqrt(2.0)).epsilon(1e-9));
    CHECK(j["diagnostics"]["attempts"] == 100);
}

TEST_CASE("circ5 on the tall bipyramid: six cylinders and the Solutions verdict") {
    const RunResult res = run_cli("circ5 " + bipyramid_csv(1.0));
    REQUIRE(res.exit_code == 0);
    const json j = parse_doc(res.out);
    CHECK(j["verdict"] == "Solutions");
    REQUIRE(j["cylinders"].size() == 6);
    for (const auto& c : j["cylinders"])
        CHECK(c["radius"].get<double>() == doctest::Approx(5.0 / 6.0).epsilon(1e-9));
    CHECK(j["diagnostics"].contains("m_eigenvalues"));
    CHECK(j["diagnostics"].contains("t"));
}

TEST_CASE("circ5 on the flat bipyramid: NoneDefinite, no cylinders, exit zero") {
    const RunResult res = run_cli("circ5 " + bipyramid_csv(0.5));
    CHECK(res.exit_code == 0);
    const json j = parse_doc(res.out);
    CHECK(j["verdict"] == "NoneDefinite");
    CHECK(j["cylinders"].empty());
}

TEST_CASE("enclose on the tetrahedron") {
    const RunResult res = run_cli("enclose " + tetra_csv());
    REQUIRE(res.exit_code == 0);
    const json j = parse_doc(res.out);
    REQUIRE(j["cylinders"].size() == 1);
    CHECK(j["cylinders"][0]["radius"].get<double>() ==
          doctest::Approx(std::sqrt(2.0)).epsilon(1e-9));
    CHECK(j["cylinders"][0]["support"] == json({0, 1, 2, 3}));
    CHECK(j["diagnostics"]["k"] == 4);
    CHECK(j["input_summary"]["hull_size"] == 4);
}

TEST_CASE("enclose on collinear points: zero radius, endpoint support") {
    std::string csv;
    for (int i = 0; i < 10; ++i) {
        csv += std::to_string(0.4 * i) + "," + std::to_string(0.8 * i) + "," +
               std::to_string(0.8 * i) + "\n";
    }
    const std::string path = write_fixture("cylfit_cli_line.csv", csv);
    const RunResult res = run_cli("enclose " + path);
    REQUIRE(res.exit_code == 0);
    const json j = parse_doc(res.out);
    CHECK(j["cylinders"][0]["radius"].get<double>() <= 1e-10);
    CHECK(j["diagnostics"]["k"] == 2);
    CHECK(j["cylinders"][0]["support"] == json({0, 9}));
    CHECK(j["input_summary"]["hull_size"] == 2);
}

TEST_CASE("enclose --oracle reports the cross-check fields") {
    const std::string path = write_fixture(
        "cylfit_cli_rand8.json",
        "[[0.1,0.2,0.3],[0.9,-0.4,0.2],[-0.7,0.5,0.8],[0.3,0.9,-0.6],"
        "[-0.2,-0.8,0.4],[0.6,0.1,-0.9],[-0.5,-0.3,-0.2],[0.8,0.7,0.6]]");
    const RunResult res = run_cli("enclose " + path + " --oracle 2000");
    REQUIRE(res.exit_code == 0);
    const json j = parse_doc(res.out);
    CHECK(j["diagnostics"]["oracle_resolution"] == 2000);
    const double rho = j["cylinders"][0]["radius"].get<double>();
    const double oracle = j["diagnostics"]["oracle_radius"].get<double>();
    const double gap = j["diagnostics"]["oracle_gap"].get<double>();
    CHECK(gap == doctest::Approx(rho - oracle).epsilon(1e-12));
    CHECK(rho <= oracle + 1e-9);
}

TEST_CASE("fit accepts json input and warns below five points") {
    const RunResult res = run_cli("fit " + tetra_csv());
    REQUIRE(res.exit_code == 0);
    CHECK(res.err.find("weakly determined") != std::string::npos);
    const json j = parse_doc(res.out);
    CHECK(j["diagnostics"].contains("warnings"));
    CHECK(j["diagnostics"]["is_circumscribed"] == true);

    const std::string jpath = write_fixture(
        "cylfit_cli_fit.json",
        "[[1,0,0],[0,1,0.5],[-1,0,1],[0,-1,1.5],[1,0,2],[0,1,2.5],[-1,0,3]]");
    const RunResult res2 = run_cli("fit " + jpath);
    REQUIRE(res2.exit_code == 0);
    const json j2 = parse_doc(res2.out);
    CHECK(j2["cylinders"].size() == 1);
    CHECK(j2["cylinders"][0]["radius"].get<double>() == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("json output is byte-identical across runs apart from timing") {
    const std::string path = tetra_csv();
    for (const char* cmd : {"circ4 ", "enclose ", "fit "}) {
        RunResult a = run_cli(cmd + path);
        RunResult b = run_cli(cmd + path);
        REQUIRE(a.exit_code == 0);
        REQUIRE(b.exit_code == 0);
        json ja = parse_doc(a.out);
        json jb = parse_doc(b.out);
        ja.erase("timing");
        jb.erase("timing");
        CHECK(ja.dump() == jb.dump());
    }
}

TEST_CASE("text format renders a table") {
    const RunResult res = run_cli("circ4 " + tetra_csv() + " --format text");
    REQUIRE(res.exit_code == 0);
    CHECK(res.out.find("circ4") != std::string::npos);
    CHECK(res.out.find("radius") != std::string::npos);
    CHECK(json::accept(res.out) == false);
}

TEST_CASE("config flags are echoed into the document") {
    const RunResult res =
        run_cli("circ4 " + tetra_csv() + " --seed 99 --starts 37 --tol 1e-8 --max-iter 64");
    REQUIRE(res.exit_code == 0);
    const json j = parse_doc(res.out);
    CHECK(j["config"]["seed"] == 99);
    CHECK(j["config"]["n_starts"] == 37);
    CHECK(j["config"]["tol_rel"].get<double>() == doctest::Approx(1e-8));
    CHECK(j["config"]["tol_orth"].get<double>() == doctest::Approx(1e-8));
    CHECK(j["config"]["max_iter"] == 64);
}

TEST_CASE("verify runs its fixtures clean") {
    const RunResult res = run_cli("verify --h-grid 0.6:1.4:0.2 --sweep 25");
    CHECK(res.exit_code == 0);
    CHECK(res.out.find("PASS") != std::string::npos);
    CHECK(res.out.find("FAIL") == std::string::npos);
}

TEST_CASE("exit codes distinguish the failure classes") {
    SUBCASE("missing file is an input error") {
        CHECK(run_cli("fit /nonexistent/cylfit_nope.csv").exit_code == 1);
    }
    SUBCASE("malformed row is an input error with a line number") {
        const std::string path = write_fixture("cylfit_cli_bad.csv", "1,2\n");
        const RunResult res = run_cli("fit " + path);
        CHECK(res.exit_code == 1);
        CHECK(res.err.find("line 1") != std::string::npos);
    }
    SUBCASE("wrong cardinality for circ4 is an input error") {
        const std::string path = write_fixture(
            "cylfit_cli_five.csv", "1,1,1\n1,-1,-1\n-1,1,-1\n-1,-1,1\n0,0,0\n");
        CHECK(run_cli("circ4 " + path).exit_code == 1);
    }
    SUBCASE("coplanar circ4 reports a singular scatter matrix") {
        const std::string path =
            write_fixture("cylfit_cli_flat.csv", "0,0,0\n1,0,0\n0,1,0\n1,1,0\n");
        const RunResult res = run_cli("circ4 " + path);
        CHECK(res.exit_code == 3);
        CHECK(res.err.find("singular") != std::string::npos);
    }
    SUBCASE("duplicate points in circ5 are the degenerate class") {
        const std::string path = write_fixture(
            "cylfit_cli_dup.csv", "0,0,1\n0,0,1\n1,0,0\n0,1,0\n1,1,1\n");
        const RunResult res = run_cli("circ5 " + path);
        CHECK(res.exit_code == 4);
        const json j = parse_doc(res.out);
        CHECK(j["verdict"] == "DegenerateDuplicatePoints");
    }
    SUBCASE("unknown flag is an input error") {
        CHECK(run_cli("circ4 --definitely-not-a-flag x.csv").exit_code == 1);
    }
}

}  // TEST_SUITE
