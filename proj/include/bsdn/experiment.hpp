#pragma once

// Run and sweep orchestration: executes scenarios across models and seeds,
// aggregates (median over seeds), and writes every artifact atomically.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bsdn/netsim.hpp"
#include "bsdn/scenario.hpp"

namespace bsdn::experiment {

// Write-temp-then-rename so a reader never observes a partial file.
void write_file_atomic(const std::string& path, const std::string& content);
void write_file_atomic(const std::string& path, const Bytes& content);

std::string run_file_stem(const std::string& scenario_name, netsim::ModelKind model,
                          std::uint64_t seed);

struct RunArtifacts {
    std::vector<std::string> files;
    std::string summary;  // human-readable, one line per run
};

// One `run` invocation: each seed (or the single override) under the chosen
// model; per run writes <name>_<model>_<seed>.csv and .snapshot, plus trace
// and decision CSVs when requested/non-empty. Throws on run failure.
RunArtifacts run_scenario(const netsim::ScenarioConfig& cfg,
                          std::optional<netsim::ModelKind> model_override,
                          std::optional<std::uint64_t> seed_override, const std::string& out_dir,
                          bool with_trace);

struct SweepCell {
    bool ok = false;
    double metric = 0;      // median over seeds
    std::string error;      // first failure, for diagnostics
};

struct SweepRow {
    double value = 0;
    std::map<netsim::ModelKind, SweepCell> cells;
    std::optional<double> reduction_pct;  // 100*(pub - perm)/pub
};

// Metric per cell: steady goodput for attack_rate sweeps, mean update
// confirmation latency for packet_in_rate sweeps; median across the
// scenario's seed list. Cells that fail keep running the rest of the grid.
std::vector<SweepRow> run_sweep(const netsim::ScenarioConfig& cfg,
                                const scenario::SweepSpec& spec);

// Wide CSV: one row per swept value, one column per model, failed cells as
// MISSING. The reduction column appears when both blockchain models are
// swept.
std::string sweep_to_csv(const std::vector<SweepRow>& rows, const scenario::SweepSpec& spec);

double median(std::vector<double> v);

}  // namespace bsdn::experiment
