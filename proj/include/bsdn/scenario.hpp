#pragma once

// Scenario files: JSON descriptions of topology, genesis content, workload
// rates, attack profile and calibration overrides. Everything is validated
// up front; errors carry a config:<field path> location.

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bsdn/netsim.hpp"

namespace bsdn::scenario {

struct ConfigError : std::runtime_error {
    ConfigError(const std::string& field_path, const std::string& why)
        : std::runtime_error("config:" + field_path + ": " + why), field(field_path) {}
    std::string field;
};

struct SweepSpec {
    std::string parameter;  // attack_rate | packet_in_rate
    std::vector<double> values;
    std::vector<netsim::ModelKind> models;
};

struct Scenario {
    netsim::ScenarioConfig config;
    std::optional<SweepSpec> sweep;
};

// Throws ConfigError on any structural or semantic problem.
Scenario parse_scenario(const std::string& json_text);
Scenario load_scenario(const std::string& path);

}  // namespace bsdn::scenario
