#include "bsdn/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace bsdn::experiment {

namespace fs = std::filesystem;

static void write_raw_atomic(const std::string& path, const char* data, std::size_t n) {
    fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("cannot write " + tmp.string());
        f.write(data, static_cast<std::streamsize>(n));
        if (!f) throw std::runtime_error("short write to " + tmp.string());
    }
    fs::rename(tmp, target);
}

void write_file_atomic(const std::string& path, const std::string& content) {
    write_raw_atomic(path, content.data(), content.size());
}

void write_file_atomic(const std::string& path, const Bytes& content) {
    write_raw_atomic(path, reinterpret_cast<const char*>(content.data()), content.size());
}

std::string run_file_stem(const std::string& scenario_name, netsim::ModelKind model,
                          std::uint64_t seed) {
    return scenario_name + "_" + netsim::model_name(model) + "_" + std::to_string(seed);
}

RunArtifacts run_scenario(const netsim::ScenarioConfig& cfg,
                          std::optional<netsim::ModelKind> model_override,
                          std::optional<std::uint64_t> seed_override, const std::string& out_dir,
                          bool with_trace) {
    RunArtifacts art;
    netsim::ModelKind model = model_override.value_or(cfg.model);
    std::vector<std::uint64_t> seeds =
        seed_override ? std::vector<std::uint64_t>{*seed_override} : cfg.seeds;

    for (std::uint64_t seed : seeds) {
        netsim::ScenarioConfig run_cfg = cfg;
        run_cfg.model = model;
        netsim::RunResult res = netsim::run(run_cfg, seed, with_trace);

        std::string stem = out_dir + "/" + run_file_stem(cfg.name, model, seed);
        write_file_atomic(stem + ".csv", res.metrics.to_csv());
        art.files.push_back(stem + ".csv");
        write_file_atomic(stem + ".snapshot", ledger::encode_snapshot(res.ledger));
        art.files.push_back(stem + ".snapshot");
        if (with_trace) {
            write_file_atomic(stem + "_trace.csv", netsim::trace_to_csv(res.trace));
            art.files.push_back(stem + "_trace.csv");
        }
        if (!res.decisions.empty()) {
            write_file_atomic(stem + "_decisions.csv", netsim::decisions_to_csv(res.decisions));
            art.files.push_back(stem + "_decisions.csv");
        }

        char line[256];
        std::snprintf(line, sizeof(line),
                      "%s model=%s seed=%llu blocks=%zu mean_goodput=%.3e "
                      "mean_update_latency=%.6f accepted=%llu rejected=%llu\n",
                      cfg.name.c_str(), netsim::model_name(model).c_str(),
                      static_cast<unsigned long long>(seed), res.ledger.chain().size(),
                      res.metrics.mean_goodput, res.metrics.mean_update_latency,
                      static_cast<unsigned long long>(res.metrics.total_accepted),
                      static_cast<unsigned long long>(res.metrics.total_rejected));
        art.summary += line;
    }
    return art;
}

double median(std::vector<double> v) {
    if (v.empty()) return 0;
    std::sort(v.begin(), v.end());
    std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<SweepRow> run_sweep(const netsim::ScenarioConfig& cfg,
                                const scenario::SweepSpec& spec) {
    std::vector<SweepRow> rows;
    for (double value : spec.values) {
        SweepRow row;
        row.value = value;
        for (netsim::ModelKind model : spec.models) {
            SweepCell cell;
            std::vector<double> metrics;
            for (std::uint64_t seed : cfg.seeds) {
                netsim::ScenarioConfig run_cfg = cfg;
                run_cfg.model = model;
                if (spec.parameter == "attack_rate")
                    run_cfg.attack.flood_rate = value;
                else
                    run_cfg.workload.packet_in_rate = value;
                try {
                    netsim::RunResult res = netsim::run(run_cfg, seed, false);
                    metrics.push_back(spec.parameter == "attack_rate"
                                          ? netsim::steady_goodput(res.metrics)
                                          : res.metrics.mean_update_latency);
                } catch (const std::exception& e) {
                    if (cell.error.empty())
                        cell.error = "model=" + netsim::model_name(model) +
                                     " seed=" + std::to_string(seed) + ": " + e.what();
                }
            }
            if (metrics.size() == cfg.seeds.size()) {
                cell.ok = true;
                cell.metric = median(std::move(metrics));
            }
            row.cells[model] = std::move(cell);
        }
        auto perm = row.cells.find(netsim::ModelKind::permissioned_bc_sdn);
        auto pub = row.cells.find(netsim::ModelKind::public_bc_sdn);
        if (perm != row.cells.end() && pub != row.cells.end() && perm->second.ok &&
            pub->second.ok && pub->second.metric > 0)
            row.reduction_pct =
                100.0 * (pub->second.metric - perm->second.metric) / pub->second.metric;
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string sweep_to_csv(const std::vector<SweepRow>& rows, const scenario::SweepSpec& spec) {
    bool with_reduction =
        std::count(spec.models.begin(), spec.models.end(),
                   netsim::ModelKind::permissioned_bc_sdn) > 0 &&
        std::count(spec.models.begin(), spec.models.end(), netsim::ModelKind::public_bc_sdn) > 0;

    std::string out = spec.parameter;
    for (netsim::ModelKind m : spec.models) out += "," + netsim::model_name(m);
    if (with_reduction) out += ",reduction_pct";
    out += "\n";

    char buf[64];
    for (const auto& row : rows) {
        std::snprintf(buf, sizeof(buf), "%.6f", row.value);
        out += buf;
        for (netsim::ModelKind m : spec.models) {
            const SweepCell& cell = row.cells.at(m);
            if (cell.ok) {
                std::snprintf(buf, sizeof(buf), ",%.6f", cell.metric);
                out += buf;
            } else {
                out += ",MISSING";
            }
        }
        if (with_reduction) {
            if (row.reduction_pct) {
                std::snprintf(buf, sizeof(buf), ",%.6f", *row.reduction_pct);
                out += buf;
            } else {
                out += ",MISSING";
            }
        }
        out += "\n";
    }
    return out;
}

}  // namespace bsdn::experiment
