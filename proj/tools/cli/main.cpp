// prequant: run one workflow from a JSON scene config and print a report.
//
// Exit codes: 0 success, 2 invalid input, 3 numeric failure.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "prequant/errors.hpp"

namespace {

constexpr const char* kSchemaVersion = "1.0";
constexpr int kOk = 0, kInvalid = 2, kNumeric = 3;

std::string svg_path(const std::string& out, const std::string& command) {
    if (out.empty()) return command + ".svg";
    const auto dot = out.find_last_of('.');
    const auto slash = out.find_last_of('/');
    if (dot != std::string::npos && (slash == std::string::npos || dot > slash)) return out.substr(0, dot) + ".svg";
    return out + ".svg";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Geometric prequantization workflows"};
    std::string command, config_path, out_path;
    bool plot = false;
    std::optional<std::uint64_t> seed;
    double tolerance_scale = 1.0;
    app.add_option("command", command, pqcli::command_list())->required();
    app.add_option("--config", config_path, "scene config (JSON)")->required();
    app.add_option("--out", out_path, "write the report here instead of stdout");
    app.add_flag("--plot", plot, "also write an SVG phase portrait (flow)");
    app.add_option("--seed", seed, "seed for sampled points and random cases");
    app.add_option("--tolerance-scale", tolerance_scale, "multiplies every residual threshold")
        ->check(CLI::PositiveNumber);
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kInvalid;
    }

    const auto start = std::chrono::steady_clock::now();
    try {
        if (!pqcli::is_command(command))
            throw pq::ValidationError("unknown command '" + command + "'; expected one of " + pqcli::command_list());
        std::ifstream in(config_path);
        if (!in) throw pq::ValidationError("cannot read config '" + config_path + "'");
        std::stringstream text;
        text << in.rdbuf();
        pqcli::json config;
        try {
            config = pqcli::json::parse(text.str(), nullptr, true, true);
        } catch (const pqcli::json::parse_error& e) {
            throw pq::ValidationError("config '" + config_path + "' is not valid JSON: " + e.what());
        }
        if (!config.is_object()) throw pq::ValidationError("config must be a JSON object");

        pqcli::Context ctx;
        pqcli::json scene = config;
        if (scene.contains("seed")) {
            if (!scene["seed"].is_number_unsigned()) throw pq::ValidationError("config.seed must be a nonnegative integer");
            ctx.seed = scene["seed"].get<std::uint64_t>();
            scene.erase("seed");
        }
        if (seed) ctx.seed = *seed;
        ctx.tolerance_scale = tolerance_scale;
        ctx.plot = plot;

        pqcli::CommandOutput result = pqcli::run_command(command, scene, ctx);

        bool all_pass = true;
        for (const auto& c : result.checks) all_pass = all_pass && c["pass"].get<bool>();
        pqcli::json report = {{"schema_version", kSchemaVersion},
                              {"command", command},
                              {"seed", ctx.seed},
                              {"tolerance_scale", tolerance_scale},
                              {"config", config},
                              {"result", result.result},
                              {"checks", result.checks},
                              {"all_checks_pass", all_pass}};
        if (result.svg) {
            const std::string path = svg_path(out_path, command);
            std::ofstream svg(path);
            if (!svg) throw pq::ValidationError("cannot write '" + path + "'");
            svg << *result.svg;
            report["plot"] = path;
        }
        const std::string body = report.dump(2) + "\n";
        if (out_path.empty()) {
            std::cout << body;
        } else {
            std::ofstream out(out_path);
            if (!out) throw pq::ValidationError("cannot write '" + out_path + "'");
            out << body;
        }
    } catch (const pq::Error& e) {
        std::cerr << "prequant " << command << ": " << (e.numeric() ? "numeric failure: " : "invalid input: ")
                  << e.what() << "\n";
        return e.numeric() ? kNumeric : kInvalid;
    } catch (const std::exception& e) {
        std::cerr << "prequant " << command << ": invalid input: " << e.what() << "\n";
        return kInvalid;
    }
    // Wall time stays out of the report so reports are byte-identical.
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::fprintf(stderr, "prequant %s: wall time %.3f s\n", command.c_str(), seconds);
    return kOk;
}
