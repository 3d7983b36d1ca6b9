#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "config.hpp"

namespace pqcli {

struct Context {
    std::uint64_t seed = 1;
    double tolerance_scale = 1.0;
    bool plot = false;
};

struct CommandOutput {
    json result;
    json checks = json::array(); // {name, value, threshold, comparison, pass}
    std::optional<std::string> svg;
};

bool is_command(const std::string& name);
const char* command_list();

// `config` is the scene without the top-level "seed" key.
CommandOutput run_command(const std::string& name, const json& config, const Context& ctx);

} // namespace pqcli
