#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

const fs::path& scratch() {
    static const fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / "prequant_cli_test";
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string write_config(const std::string& name, const std::string& body) {
    const fs::path p = scratch() / name;
    std::ofstream(p) << body;
    return p.string();
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

int run(const std::string& command, const std::string& config, const std::string& out, const std::string& extra = "") {
    const std::string line = std::string("\"") + PREQUANT_CLI + "\" " + command + " --config \"" + config + "\" --out \"" +
                             out + "\" " + extra + " 2>/dev/null";
    const int status = std::system(line.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string shipped(const char* name) { return std::string(PREQUANT_CONFIG_DIR) + "/" + name; }

} // namespace

TEST_CASE("flow report") {
    const std::string out = (scratch() / "flow.json").string();
    REQUIRE(run("flow", shipped("flow_oscillator.json"), out) == 0);
    const json r = json::parse(slurp(out));
    CHECK(r["schema_version"] == "1.0");
    CHECK(r["command"] == "flow");
    CHECK(r["seed"] == 7);
    CHECK(r["all_checks_pass"] == true);
    CHECK(r["result"]["energy_drift"].get<double>() <= 1e-6);
    CHECK(r["config"]["hamiltonian"] == "p^2/2 + q^2/2");
    CHECK_FALSE(r.contains("plot"));
}

TEST_CASE("plots are written next to the report") {
    const std::string out = (scratch() / "flow_plot.json").string();
    REQUIRE(run("flow", shipped("flow_oscillator.json"), out, "--plot") == 0);
    const json r = json::parse(slurp(out));
    const fs::path svg = scratch() / "flow_plot.svg";
    CHECK(r["plot"] == svg.string());
    CHECK(slurp(svg).rfind("<svg", 0) == 0);
}

TEST_CASE("holonomy at r² = 1/2 has no polarized sections") {
    const std::string cfg = write_config("half.json", R"({"r_squared": [0.5, 1]})");
    const std::string out = (scratch() / "half_out.json").string();
    REQUIRE(run("holonomy", cfg, out) == 0);
    const json r = json::parse(slurp(out));
    const auto& leaves = r["result"]["leaves"];
    REQUIRE(leaves.size() == 2);
    CHECK(leaves[0]["polarized_exists"] == false);
    CHECK(leaves[1]["polarized_exists"] == true);
}

TEST_CASE("torus total 1/2 is infeasible with a certificate") {
    const std::string out = (scratch() / "half_torus.json").string();
    REQUIRE(run("cocycle", shipped("cocycle_torus_half.json"), out) == 0);
    const json r = json::parse(slurp(out));
    CHECK(r["result"]["infeasible"] == true);
    CHECK(r["result"].contains("certificate"));
}

TEST_CASE("seeds override the config and keep reports identical") {
    const std::string a = (scratch() / "seed_a.json").string(), b = (scratch() / "seed_b.json").string();
    REQUIRE(run("poisson-check", shipped("poisson_random.json"), a, "--seed 11") == 0);
    REQUIRE(run("poisson-check", shipped("poisson_random.json"), b, "--seed 11") == 0);
    CHECK(slurp(a) == slurp(b));
    CHECK(json::parse(slurp(a))["seed"] == 11);
}

TEST_CASE("invalid input exits with 2") {
    const std::string out = (scratch() / "bad.json").string();
    CHECK(run("flow", write_config("unknown_key.json", R"({"phase_space": {"kind": "cotangent"}, "hamiltonian": "p",
        "x0": [0, 0], "T": 1, "dt": 0.1, "colour": "red"})"), out) == 2);
    CHECK(run("flow", write_config("broken.json", "{\"T\": "), out) == 2);
    CHECK(run("flow", (scratch() / "missing.json").string(), out) == 2);
    CHECK(run("teleport", shipped("flow_oscillator.json"), out) == 2);
    CHECK(run("flow", write_config("bad_expr.json", R"({"phase_space": {"kind": "cotangent"}, "hamiltonian": "p^",
        "x0": [0, 0], "T": 1, "dt": 0.1})"), out) == 2);
}

TEST_CASE("numeric failures exit with 3") {
    const std::string out = (scratch() / "numeric.json").string();
    // q(t) = t leaves the strip |q| < 1.
    const std::string cfg = write_config("strip.json", R"({
        "phase_space": {"kind": "custom", "coordinates": ["q", "p"], "bounds": [[-1, 1], [null, null]],
                        "omega": [{"i": 0, "j": 1, "value": "-1"}]},
        "hamiltonian": "p", "x0": [0, 0], "T": 5, "dt": 0.1})");
    CHECK(run("flow", cfg, out) == 3);
}
