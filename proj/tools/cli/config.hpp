#pragma once

// Strict reading of JSON scene configs: every key must be consumed, so a
// misspelt key is reported instead of silently falling back to a default.

#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "prequant/densities.hpp"
#include "prequant/diffcoh.hpp"
#include "prequant/polarization.hpp"
#include "prequant/prequantum.hpp"

namespace pqcli {

using json = nlohmann::ordered_json;

class Obj {
public:
    Obj(const json& j, std::string path);

    bool has(const std::string& key) const;
    const json& at(const std::string& key); // required
    const json* find(const std::string& key); // optional

    std::string string(const std::string& key);
    std::string string(const std::string& key, const std::string& fallback);
    double number(const std::string& key);
    double number(const std::string& key, double fallback);
    std::size_t count(const std::string& key, std::size_t fallback);
    bool flag(const std::string& key, bool fallback);
    Obj object(const std::string& key);

    std::string path(const std::string& key) const { return path_ + "." + key; }

    // Throws ValidationError naming the first unknown key.
    void finish() const;

private:
    const json& j_;
    std::string path_;
    std::set<std::string> used_;
};

// A number, or a string holding a constant expression such as "2*pi".
double to_number(const json& j, const std::string& path);
std::vector<double> to_numbers(const json& j, const std::string& path);
std::vector<std::string> to_strings(const json& j, const std::string& path);
pq::Box to_box(const json& j, const std::string& path);
pq::cplx to_complex(const json& j, const std::string& path);
// "re" or ["re", "im"].
std::pair<std::string, std::string> to_complex_expression(const json& j, const std::string& path);

pq::SymplecticStructure phase_space(const json& j, const std::string& path);
pq::PrequantumBundle bundle(const json& j, const std::string& path);
pq::Section section(const pq::Chart& chart, const json& j, const std::string& path);
std::shared_ptr<const pq::Atlas> atlas(const json& j, const std::string& path);
pq::dc::Complex complex(const json& j, const std::string& path);

} // namespace pqcli
