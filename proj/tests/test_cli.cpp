#include <doctest.h>

#include <phigeo/io.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

std::string cli_path() {
    const char* p = std::getenv("PHIGEO_CLI");
    REQUIRE(p != nullptr);
    return p;
}

struct RunOutcome {
    int exit_code = -1;
    std::string output;  // stdout + stderr
};

RunOutcome run_cli(const std::string& args, const fs::path& workdir) {
    const fs::path log = workdir / "cli.log";
    const std::string cmd = cli_path() + " " + args + " > " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    RunOutcome out;
    out.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    if (fs::exists(log)) out.output = phigeo::read_text_file(log.string());
    return out;
}

fs::path fresh_dir(const std::string& tag) {
    const fs::path dir = fs::temp_directory_path() / ("phigeo_cli_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_config(const fs::path& path, const std::string& body) {
    std::ofstream f(path);
    f << body;
}

}  // namespace

TEST_CASE("cli: identities run on the cigar exits 0") {
    const fs::path dir = fresh_dir("identities");
    write_config(dir / "config.json", R"({
        "model": {"kind": "cigar"},
        "c": [0.25],
        "experiments": ["identities"],
        "out": ")" + (dir / "out").string() + R"("
    })");
    auto out = run_cli("--config " + (dir / "config.json").string(), dir);
    CHECK(out.exit_code == 0);
    CHECK(fs::exists(dir / "out" / "identities.csv"));
    CHECK(fs::exists(dir / "out" / "report.json"));
    const std::string report = phigeo::read_text_file((dir / "out" / "report.json").string());
    CHECK(report.find("\"pass\": true") != std::string::npos);
}

TEST_CASE("cli: flat geodesic regression exits 0") {
    const fs::path dir = fresh_dir("flatgeo");
    write_config(dir / "config.json", R"({
        "model": {"kind": "euclidean", "n": 2, "phi": "const", "c0": 0.25},
        "c": [0.25],
        "experiments": ["geodesic"],
        "resolution": {"K": 64},
        "targets": {"distances": [3.0, 5.0]},
        "out": ")" + (dir / "out").string() + R"("
    })");
    auto out = run_cli("--config " + (dir / "config.json").string(), dir);
    CHECK(out.exit_code == 0);
    CHECK(fs::exists(dir / "out" / "geodesic.csv"));
}

TEST_CASE("cli: K = 1 is a config error naming resolution.K") {
    const fs::path dir = fresh_dir("badk");
    write_config(dir / "config.json", R"({
        "model": {"kind": "cigar"},
        "experiments": ["identities"],
        "resolution": {"K": 1}
    })");
    auto out = run_cli("--config " + (dir / "config.json").string(), dir);
    CHECK(out.exit_code == 2);
    CHECK(out.output.find("resolution.K") != std::string::npos);
}

TEST_CASE("cli: missing config file and malformed JSON fail cleanly") {
    const fs::path dir = fresh_dir("badpath");
    auto out = run_cli("--config " + (dir / "no_such_config.json").string(), dir);
    CHECK(out.exit_code != 0);
    write_config(dir / "broken.json", "{not json");
    auto out2 = run_cli("--config " + (dir / "broken.json").string(), dir);
    CHECK(out2.exit_code == 2);
}

TEST_CASE("cli: unknown experiment names are rejected with a field path") {
    const fs::path dir = fresh_dir("badexp");
    write_config(dir / "config.json", R"({
        "model": {"kind": "cigar"},
        "experiments": ["identities", "frobnicate"]
    })");
    auto out = run_cli("--config " + (dir / "config.json").string(), dir);
    CHECK(out.exit_code == 2);
    CHECK(out.output.find("experiments[1]") != std::string::npos);
}

TEST_CASE("cli: byte-identical CSVs for identical config and seed") {
    const fs::path dir = fresh_dir("determinism");
    write_config(dir / "config.json", R"({
        "model": {"kind": "cigar"},
        "c": [0.25],
        "experiments": ["geodesic"],
        "resolution": {"K": 128},
        "targets": {"distances": [5.0]},
        "seed": 7
    })");
    auto a = run_cli("--config " + (dir / "config.json").string() + " --out " +
                         (dir / "a").string(),
                     dir);
    auto b = run_cli("--config " + (dir / "config.json").string() + " --out " +
                         (dir / "b").string(),
                     dir);
    REQUIRE(a.exit_code == 0);
    REQUIRE(b.exit_code == 0);
    const std::string ca = phigeo::read_text_file((dir / "a" / "geodesic.csv").string());
    const std::string cb = phigeo::read_text_file((dir / "b" / "geodesic.csv").string());
    CHECK(ca == cb);
    CHECK(!ca.empty());
}

TEST_CASE("cli: decay and rho runs emit plot series") {
    const fs::path dir = fresh_dir("plots");
    write_config(dir / "config.json", R"({
        "model": {"kind": "cigar"},
        "c": [0.25],
        "experiments": ["decay", "rho"],
        "resolution": {"K": 128},
        "targets": {"distances": [5.0, 8.0], "points": [[1.5, 1.5]], "s_bars": [2.0]},
        "out": ")" + (dir / "out").string() + R"("
    })");
    auto out = run_cli("--config " + (dir / "config.json").string(), dir);
    CHECK(out.exit_code == 0);
    CHECK(fs::exists(dir / "out" / "decay.csv"));
    CHECK(fs::exists(dir / "out" / "rho.csv"));
    CHECK(fs::exists(dir / "out" / "decay_ric.dat"));
    CHECK(fs::exists(dir / "out" / "decay_kratio.dat"));
    CHECK(fs::exists(dir / "out" / "hj_convergence.dat"));

    // decay_ric.dat rows are sorted by d
    const std::string ric = phigeo::read_text_file((dir / "out" / "decay_ric.dat").string());
    const auto nl = ric.find('\n');
    REQUIRE(nl != std::string::npos);
    const double d0 = std::stod(ric.substr(0, ric.find(' ')));
    const double d1 = std::stod(ric.substr(nl + 1, ric.find(' ', nl + 1) - nl - 1));
    CHECK(d0 < d1);

    // --only plots regenerates from the stored outputs
    fs::remove(dir / "out" / "decay_ric.dat");
    auto replot = run_cli("--config " + (dir / "config.json").string() + " --only plots", dir);
    CHECK(replot.exit_code == 0);
    CHECK(fs::exists(dir / "out" / "decay_ric.dat"));
}

TEST_CASE("cli: --only plots on an empty directory reports missing files") {
    const fs::path dir = fresh_dir("noplots");
    write_config(dir / "config.json", R"({
        "model": {"kind": "cigar"},
        "experiments": ["identities"],
        "out": ")" + (dir / "empty_out").string() + R"("
    })");
    fs::create_directories(dir / "empty_out");
    auto out = run_cli("--config " + (dir / "config.json").string() + " --only plots", dir);
    CHECK(out.exit_code != 0);
    CHECK(out.output.find("missing") != std::string::npos);
}
