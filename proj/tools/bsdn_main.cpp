// Experiment runner: executes scenario runs and sweeps, verifies and
// replays chain snapshots. Exit codes: 0 success, 2 config/format error,
// 3 runtime failure, 4 chain integrity failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "bsdn/experiment.hpp"
#include "bsdn/ledger.hpp"
#include "bsdn/netsim.hpp"
#include "bsdn/scenario.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;
constexpr int kExitIntegrity = 4;

bsdn::Bytes read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path);
    std::ostringstream buf;
    buf << f.rdbuf();
    std::string s = buf.str();
    return bsdn::Bytes(s.begin(), s.end());
}

int cmd_run(const std::string& config_path, const std::optional<std::string>& model_name,
            const std::optional<std::uint64_t>& seed, const std::string& out_dir, bool trace) {
    bsdn::scenario::Scenario sc;
    try {
        sc = bsdn::scenario::load_scenario(config_path);
    } catch (const bsdn::scenario::ConfigError& e) {
        std::cerr << e.what() << "\n";
        return kExitConfig;
    }
    std::optional<bsdn::netsim::ModelKind> model;
    if (model_name) {
        model = bsdn::netsim::model_from_name(*model_name);
        if (!model) {
            std::cerr << "unknown model '" << *model_name
                      << "' (valid: permissioned_bc_sdn, public_bc_sdn, openflow_sdn)\n";
            return kExitConfig;
        }
    }
    try {
        auto art = bsdn::experiment::run_scenario(sc.config, model, seed, out_dir, trace);
        bsdn::experiment::write_file_atomic(out_dir + "/" + sc.config.name + "_summary.txt",
                                            art.summary);
        std::cout << art.summary;
        for (const auto& f : art.files) std::cout << "wrote " << f << "\n";
        return kExitOk;
    } catch (const std::exception& e) {
        std::cerr << "run failed: scenario=" << sc.config.name
                  << " model=" << bsdn::netsim::model_name(model.value_or(sc.config.model))
                  << (seed ? " seed=" + std::to_string(*seed) : std::string{}) << ": " << e.what()
                  << "\n";
        return kExitRuntime;
    }
}

int cmd_sweep(const std::string& config_path, const std::string& out_dir) {
    bsdn::scenario::Scenario sc;
    try {
        sc = bsdn::scenario::load_scenario(config_path);
    } catch (const bsdn::scenario::ConfigError& e) {
        std::cerr << e.what() << "\n";
        return kExitConfig;
    }
    if (!sc.sweep) {
        std::cerr << "config:sweep: missing (scenario " << sc.config.name
                  << " has no sweep section)\n";
        return kExitConfig;
    }
    try {
        auto rows = bsdn::experiment::run_sweep(sc.config, *sc.sweep);
        std::string csv = bsdn::experiment::sweep_to_csv(rows, *sc.sweep);
        std::string path = out_dir + "/" + sc.config.name + "_sweep.csv";
        bsdn::experiment::write_file_atomic(path, csv);
        std::cout << csv;
        std::cout << "wrote " << path << "\n";
        bool missing = false;
        for (const auto& row : rows)
            for (const auto& [model, cell] : row.cells)
                if (!cell.ok) {
                    missing = true;
                    std::cerr << "sweep cell failed: scenario=" << sc.config.name << " value="
                              << row.value << " " << cell.error << "\n";
                }
        return missing ? kExitRuntime : kExitOk;
    } catch (const std::exception& e) {
        std::cerr << "sweep failed: scenario=" << sc.config.name << ": " << e.what() << "\n";
        return kExitRuntime;
    }
}

int cmd_verify(const std::string& snapshot_path) {
    std::vector<bsdn::ledger::Block> chain;
    bsdn::Digest tip;
    try {
        auto parsed = bsdn::ledger::parse_snapshot(read_file(snapshot_path));
        chain = std::move(parsed.first);
        tip = parsed.second;
    } catch (const std::exception& e) {
        std::cerr << "format error: " << e.what() << "\n";
        return kExitConfig;
    }
    bsdn::Decision d = bsdn::ledger::verify_chain_blocks(chain, tip);
    if (!d) {
        std::cerr << "integrity failure: " << d.reason << "\n";
        return kExitIntegrity;
    }
    auto state = bsdn::ledger::replay(chain);
    std::cout << "chain length: " << chain.size() << "\n";
    std::cout << "tip hash: " << tip.hex() << "\n";
    std::cout << "state digest: " << state->digest().hex() << "\n";
    return kExitOk;
}

int cmd_replay(const std::string& snapshot_path) {
    std::vector<bsdn::ledger::Block> chain;
    bsdn::Digest tip;
    try {
        auto parsed = bsdn::ledger::parse_snapshot(read_file(snapshot_path));
        chain = std::move(parsed.first);
        tip = parsed.second;
    } catch (const std::exception& e) {
        std::cerr << "format error: " << e.what() << "\n";
        return kExitConfig;
    }
    if (bsdn::Decision d = bsdn::ledger::verify_chain_blocks(chain, tip); !d) {
        std::cerr << "integrity failure: " << d.reason << "\n";
        return kExitIntegrity;
    }
    auto state = bsdn::ledger::init_state(*chain[0].genesis);
    std::printf("%-6s %-10s %-4s %-10s %s\n", "index", "time", "txs", "hash", "state");
    for (std::size_t i = 0; i < chain.size(); ++i) {
        if (i > 0)
            for (const auto& tx : chain[i].transactions) bsdn::ledger::apply_transaction(state, tx);
        std::printf("%-6zu %-10.3f %-4zu %-10s %s\n", i, chain[i].timestamp,
                    chain[i].transactions.size(), bsdn::ledger::hash_block(chain[i]).prefix8().c_str(),
                    state.digest().prefix8().c_str());
    }
    std::cout << "final state digest: " << state.digest().hex() << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"blockchain-backed SDN simulator and experiment runner"};
    app.require_subcommand(1);

    std::string config_path;
    std::string snapshot_path;
    std::string out_dir = "out";
    std::optional<std::string> model_name;
    std::optional<std::uint64_t> seed;
    bool trace = false;

    auto* run = app.add_subcommand("run", "execute a scenario and write metrics CSVs");
    run->add_option("config", config_path, "scenario JSON file")->required();
    run->add_option("--seed", seed, "run a single seed instead of the scenario's seed list");
    run->add_option("--model", model_name, "override the scenario's network model");
    run->add_option("--out", out_dir, "output directory (default: out)");
    run->add_flag("--trace", trace, "also write per-message trace CSVs");

    auto* sweep = app.add_subcommand("sweep", "run the scenario's parameter sweep");
    sweep->add_option("config", config_path, "scenario JSON file with a sweep section")->required();
    sweep->add_option("--out", out_dir, "output directory (default: out)");

    auto* verify = app.add_subcommand("verify", "verify a chain snapshot");
    verify->add_option("snapshot", snapshot_path, "snapshot file")->required();

    auto* replay = app.add_subcommand("replay", "replay a chain snapshot block by block");
    replay->add_option("snapshot", snapshot_path, "snapshot file")->required();

    CLI11_PARSE(app, argc, argv);

    if (run->parsed()) return cmd_run(config_path, model_name, seed, out_dir, trace);
    if (sweep->parsed()) return cmd_sweep(config_path, out_dir);
    if (verify->parsed()) return cmd_verify(snapshot_path);
    if (replay->parsed()) return cmd_replay(snapshot_path);
    return kExitConfig;
}
