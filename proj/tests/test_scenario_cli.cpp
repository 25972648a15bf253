// Scenario file validation, the experiment helpers, and the installed CLI.
// Parser cases feed JSON variants through parse_scenario and pin the
// config:<field> location reported on rejection; the CLI cases drive the
// real binary as a subprocess and pin its exit-code contract
// (0 ok / 2 config-or-format / 3 runtime / 4 integrity).

#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "bsdn/experiment.hpp"
#include "bsdn/ledger.hpp"
#include "bsdn/netsim.hpp"
#include "bsdn/scenario.hpp"

using nlohmann::json;
namespace fs = std::filesystem;
using namespace bsdn;

namespace {

// Smallest scenario that passes every validation layer; individual cases
// mutate one field at a time.
json base_scenario() {
    return json{
        {"name", "mini"},
        {"end_time", 5.0},
        {"topology",
         {{"controllers", {1, 2}},
          {"switches", {10}},
          {"hosts", {{{"id", 30}, {"server", 10}, {"capacity", 4}}}},
          {"links",
           {{{"a", 1}, {"b", 2}, {"latency", 0.002}},
            {{"a", 1}, {"b", 10}, {"latency", 0.002}},
            {{"a", 2}, {"b", 10}, {"latency", 0.002}}}}}},
        {"users", {{{"id", 100}, {"role", "admin"}, {"org", "ops"}, {"clearance", 2}}}},
        {"tasks", {{{"id", 1}, {"cost", 1}, {"duration", 1.0}}}},
        {"policies",
         {{{"id", 1}, {"owner", 100}, {"device", 30}, {"require", json::array()}, {"tasks", {1}}}}},
    };
}

// Returns the config:<field> location of the rejection, failing the test if
// the text parses cleanly.
std::string rejected_field(const json& j) {
    try {
        scenario::parse_scenario(j.dump());
    } catch (const scenario::ConfigError& e) {
        return e.field;
    }
    FAIL("expected ConfigError, got a clean parse");
    return {};
}

fs::path fresh_dir(const std::string& leaf) {
    fs::path dir = fs::temp_directory_path() / "bsdn_scn_tests" / leaf;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void spit(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    f << text;
}

std::string slurp(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    REQUIRE_MESSAGE(bool(f), "missing file " << path.string());
    std::ostringstream buf;
    buf << f.rdbuf();
    return buf.str();
}

// Runs the CLI binary and returns its exit status. Output is discarded; the
// tests only care about the status and the files left behind.
int cli(const std::string& args) {
    std::string cmd = std::string(BSDN_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    int rc = std::system(cmd.c_str());
    REQUIRE(rc != -1);
    REQUIRE(WIFEXITED(rc));
    return WEXITSTATUS(rc);
}

}  // namespace

TEST_SUITE_BEGIN("scenario_cli");

TEST_CASE("minimal scenario parses and fills defaults") {
    scenario::Scenario sc = scenario::parse_scenario(base_scenario().dump());
    const netsim::ScenarioConfig& c = sc.config;
    CHECK(c.name == "mini");
    CHECK(c.end_time == 5.0);
    CHECK(c.sample_interval == 0.5);
    CHECK(c.loss_prob == 0.0);
    CHECK(c.poll_interval == 0.0);
    CHECK(c.model == netsim::ModelKind::permissioned_bc_sdn);
    CHECK(c.seeds == std::vector<std::uint64_t>{1, 2, 3, 4, 5});
    CHECK(c.genesis.controllers.size() == 2);
    CHECK(c.genesis.switches.size() == 1);
    CHECK(c.genesis.hosts.size() == 1);
    CHECK(c.genesis.policies.size() == 1);
    CHECK(c.workload.flow_update_rate == 0.0);
    CHECK(c.attack.flood_rate == 0.0);
    CHECK(!sc.sweep);

    // The host uplink becomes a topology link automatically.
    bool host_link = false;
    for (const auto& l : c.topo.links)
        if ((l.a == 30 && l.b == 10) || (l.a == 10 && l.b == 30)) host_link = true;
    CHECK(host_link);
}

TEST_CASE("rejections name the offending field") {
    json j = base_scenario();

    SUBCASE("not JSON at all") {
        try {
            scenario::parse_scenario("{nope");
            FAIL("parsed");
        } catch (const scenario::ConfigError& e) {
            CHECK(e.field == "<root>");
            CHECK(std::string(e.what()).find("not valid JSON") != std::string::npos);
        }
    }
    SUBCASE("top level must be an object") {
        CHECK(rejected_field(json::array()) == "<root>");
    }
    SUBCASE("missing name") {
        j.erase("name");
        CHECK(rejected_field(j) == "<root>.name");
    }
    SUBCASE("missing end_time") {
        j.erase("end_time");
        CHECK(rejected_field(j) == "<root>.end_time");
    }
    SUBCASE("nonpositive end_time") {
        j["end_time"] = 0.0;
        CHECK(rejected_field(j) == "end_time");
    }
    SUBCASE("nonpositive sample_interval") {
        j["sample_interval"] = -1.0;
        CHECK(rejected_field(j) == "sample_interval");
    }
    SUBCASE("loss probability of one would drop everything") {
        j["loss_prob"] = 1.0;
        CHECK(rejected_field(j) == "loss_prob");
    }
    SUBCASE("empty seeds") {
        j["seeds"] = json::array();
        CHECK(rejected_field(j) == "seeds");
    }
    SUBCASE("negative seed") {
        j["seeds"] = {1, -4};
        CHECK(rejected_field(j) == "seeds[1]");
    }
    SUBCASE("unknown model name") {
        j["model"] = "flowvisor";
        try {
            scenario::parse_scenario(j.dump());
            FAIL("parsed");
        } catch (const scenario::ConfigError& e) {
            CHECK(e.field == "model");
            // The message must list the valid spellings so a typo is
            // self-correcting from the error alone.
            std::string w = e.what();
            CHECK(w.find("permissioned_bc_sdn") != std::string::npos);
            CHECK(w.find("public_bc_sdn") != std::string::npos);
            CHECK(w.find("openflow_sdn") != std::string::npos);
        }
    }
    SUBCASE("missing topology") {
        j.erase("topology");
        CHECK(rejected_field(j) == "<root>.topology");
    }
    SUBCASE("no controllers") {
        j["topology"]["controllers"] = json::array();
        CHECK(rejected_field(j) == "topology.controllers");
    }
    SUBCASE("no switches") {
        j["topology"].erase("switches");
        CHECK(rejected_field(j) == "topology.switches");
    }
    SUBCASE("nonpositive link latency") {
        j["topology"]["links"][1]["latency"] = 0.0;
        CHECK(rejected_field(j) == "topology.links[1].latency");
    }
    SUBCASE("link to an undeclared node") {
        j["topology"]["links"].push_back({{"a", 1}, {"b", 77}, {"latency", 0.001}});
        json jj = j;
        try {
            scenario::parse_scenario(jj.dump());
            FAIL("parsed");
        } catch (const scenario::ConfigError& e) {
            CHECK(e.field == "topology");
            CHECK(std::string(e.what()).find("link_endpoint_unknown") != std::string::npos);
        }
    }
    SUBCASE("disconnected topology") {
        // Switch 11 exists but has no link to anything.
        j["topology"]["switches"] = {10, 11};
        try {
            scenario::parse_scenario(j.dump());
            FAIL("parsed");
        } catch (const scenario::ConfigError& e) {
            CHECK(e.field == "topology");
            CHECK(std::string(e.what()).find("disconnected") != std::string::npos);
        }
    }
    SUBCASE("unknown user role") {
        j["users"][0]["role"] = "superuser";
        CHECK(rejected_field(j) == "users[0].role");
    }
    SUBCASE("zero-cost task") {
        j["tasks"][0]["cost"] = 0;
        CHECK(rejected_field(j) == "tasks[0].cost");
    }
    SUBCASE("task that fits no device") {
        j["tasks"].push_back({{"id", 2}, {"cost", 9}, {"duration", 1.0}});
        CHECK(rejected_field(j) == "tasks[1].cost");
    }
    SUBCASE("policy without tasks") {
        j["policies"][0]["tasks"] = json::array();
        CHECK(rejected_field(j) == "policies[0].tasks");
    }
    SUBCASE("constraint with no recognised key") {
        j["policies"][0]["require"] = {{{"badge", "blue"}}};
        CHECK(rejected_field(j) == "policies[0].require[0]");
    }
    SUBCASE("unparseable initial table line") {
        j["initial_tables"] = {{"10", {"priority=banana"}}};
        CHECK(rejected_field(j) == "initial_tables.10[0]");
    }
    SUBCASE("initial table for a non-switch key") {
        j["initial_tables"] = {{"bob", json::array()}};
        CHECK(rejected_field(j) == "initial_tables.bob");
    }
    SUBCASE("genesis semantics: policy owner that is not a user") {
        j["policies"][0]["owner"] = 999;
        CHECK(rejected_field(j) == "genesis");
    }
    SUBCASE("genesis semantics: colliding principal ids") {
        j["users"][0]["id"] = 10;  // same id as the switch
        CHECK(rejected_field(j) == "genesis");
    }
    SUBCASE("negative workload rate") {
        j["workload"] = {{"flow_update_rate", -1.0}};
        CHECK(rejected_field(j) == "workload");
    }
    SUBCASE("flood without declared sources") {
        j["attack"] = {{"flood_rate", 100.0}, {"start", 1.0}};
        CHECK(rejected_field(j) == "attack.sources");
    }
    SUBCASE("flood source that is not an attacker node") {
        j["attack"] = {{"flood_rate", 100.0}, {"sources", {10}}};
        CHECK(rejected_field(j) == "attack.sources");
    }
    SUBCASE("greedy client aimed at a non-device") {
        j["greedy"] = {{"device", 10}, {"user", 100}, {"task", 1}, {"rate", 2.0}};
        CHECK(rejected_field(j) == "greedy.device");
    }
    SUBCASE("crashing a node that is not a controller") {
        j["crashed_controllers"] = {30};
        CHECK(rejected_field(j) == "crashed_controllers");
    }
    SUBCASE("sweep over an unsupported parameter") {
        j["sweep"] = {{"parameter", "loss_prob"}, {"values", {0.1}}, {"models", {"openflow_sdn"}}};
        CHECK(rejected_field(j) == "sweep.parameter");
    }
    SUBCASE("sweep without values") {
        j["sweep"] = {{"parameter", "attack_rate"}, {"values", json::array()},
                      {"models", {"openflow_sdn"}}};
        CHECK(rejected_field(j) == "sweep.values");
    }
    SUBCASE("sweep with a bad model name") {
        j["sweep"] = {{"parameter", "attack_rate"}, {"values", {0.0}}, {"models", {"sdn"}}};
        CHECK(rejected_field(j) == "sweep.models[0]");
    }
}

TEST_CASE("all bundled scenarios load") {
    const std::string dir = BSDN_SCENARIO_DIR;

    scenario::Scenario fig2 = scenario::load_scenario(dir + "/fig2_small.json");
    CHECK(fig2.config.genesis.controllers.size() == 6);
    CHECK(fig2.config.genesis.switches.size() == 15);
    CHECK(fig2.config.workload.flow_update_rate > 0);
    CHECK(!fig2.sweep);

    scenario::Scenario fig4 = scenario::load_scenario(dir + "/fig4_updates.json");
    REQUIRE(bool(fig4.sweep));
    CHECK(fig4.sweep->parameter == "packet_in_rate");
    CHECK(fig4.sweep->values.size() == 5);
    CHECK(fig4.sweep->models.size() == 2);

    scenario::Scenario fig5 = scenario::load_scenario(dir + "/fig5_dos.json");
    REQUIRE(bool(fig5.sweep));
    CHECK(fig5.sweep->parameter == "attack_rate");
    CHECK(fig5.sweep->values.size() == 5);
    CHECK(fig5.sweep->models.size() == 3);
    CHECK(fig5.config.attack.sources.size() == 3);
    // The attack must still be running when the run ends, otherwise the
    // steady-state samples would measure a recovered network.
    CHECK(fig5.config.attack.stop >= fig5.config.end_time);

    scenario::Scenario greedy = scenario::load_scenario(dir + "/greedy_server.json");
    CHECK(greedy.config.greedy.rate > 0);

    scenario::Scenario acc = scenario::load_scenario(dir + "/access_matrix.json");
    CHECK(acc.config.genesis.users.size() == 5);
    CHECK(acc.config.genesis.policies.size() == 8);
}

TEST_CASE("median of a sample") {
    CHECK(experiment::median({}) == 0.0);
    CHECK(experiment::median({3.0}) == 3.0);
    CHECK(experiment::median({5.0, 1.0, 9.0}) == 5.0);
    CHECK(experiment::median({4.0, 1.0, 9.0, 5.0}) == doctest::Approx(4.5));
    CHECK(experiment::median({2.0, 2.0, 2.0, 7.0, 2.0}) == 2.0);
}

TEST_CASE("run file stems") {
    CHECK(experiment::run_file_stem("fig5_dos", netsim::ModelKind::openflow_sdn, 3) ==
          "fig5_dos_openflow_sdn_3");
    CHECK(experiment::run_file_stem("x", netsim::ModelKind::permissioned_bc_sdn, 0) ==
          "x_permissioned_bc_sdn_0");
}

TEST_CASE("atomic file writes create directories and leave no temp files") {
    fs::path dir = fresh_dir("atomic");
    fs::path target = dir / "deep" / "nested" / "out.txt";
    experiment::write_file_atomic(target.string(), std::string("first\n"));
    CHECK(slurp(target) == "first\n");
    experiment::write_file_atomic(target.string(), std::string("second\n"));
    CHECK(slurp(target) == "second\n");
    for (const auto& e : fs::recursive_directory_iterator(dir))
        CHECK(e.path().extension() != ".tmp");

    Bytes blob{0x00, 0xff, 0x10};
    experiment::write_file_atomic((dir / "blob.bin").string(), blob);
    std::string back = slurp(dir / "blob.bin");
    REQUIRE(back.size() == 3);
    CHECK(static_cast<unsigned char>(back[1]) == 0xff);
}

TEST_CASE("sweep CSV layout follows the model list") {
    scenario::SweepSpec spec;
    spec.parameter = "packet_in_rate";
    spec.models = {netsim::ModelKind::public_bc_sdn, netsim::ModelKind::permissioned_bc_sdn};

    experiment::SweepRow r1;
    r1.value = 100;
    r1.cells[netsim::ModelKind::public_bc_sdn] = {true, 4.0, ""};
    r1.cells[netsim::ModelKind::permissioned_bc_sdn] = {true, 1.0, ""};
    r1.reduction_pct = 75.0;

    experiment::SweepRow r2;  // permissioned runs failed -> no reduction either
    r2.value = 200;
    r2.cells[netsim::ModelKind::public_bc_sdn] = {true, 2.0, ""};
    r2.cells[netsim::ModelKind::permissioned_bc_sdn] = {false, 0.0, "boom"};

    std::string csv = experiment::sweep_to_csv({r1, r2}, spec);
    CHECK(csv ==
          "packet_in_rate,public_bc_sdn,permissioned_bc_sdn,reduction_pct\n"
          "100.000000,4.000000,1.000000,75.000000\n"
          "200.000000,2.000000,MISSING,MISSING\n");

    // Without both blockchain models there is no reduction column at all.
    scenario::SweepSpec solo;
    solo.parameter = "attack_rate";
    solo.models = {netsim::ModelKind::openflow_sdn};
    experiment::SweepRow r3;
    r3.value = 0;
    r3.cells[netsim::ModelKind::openflow_sdn] = {true, 2.1e9, ""};
    std::string csv2 = experiment::sweep_to_csv({r3}, solo);
    CHECK(csv2 ==
          "attack_rate,openflow_sdn\n"
          "0.000000,2100000000.000000\n");
}

TEST_CASE("run_scenario writes one artifact set per seed") {
    scenario::Scenario sc =
        scenario::load_scenario(std::string(BSDN_SCENARIO_DIR) + "/access_matrix.json");
    fs::path dir = fresh_dir("run_scenario");

    SUBCASE("seed override limits the run to one seed") {
        experiment::RunArtifacts art = experiment::run_scenario(
            sc.config, netsim::ModelKind::permissioned_bc_sdn, 7, dir.string(), true);
        // csv + snapshot + trace; no decision log because nothing exercised
        // the access path in this scenario.
        REQUIRE(art.files.size() == 3);
        for (const auto& f : art.files) CHECK(fs::exists(f));
        CHECK(art.files[0] == (dir / "access_matrix_permissioned_bc_sdn_7.csv").string());
        CHECK(art.summary.find("seed=7") != std::string::npos);
        CHECK(std::count(art.summary.begin(), art.summary.end(), '\n') == 1);

        // The snapshot on disk is a loadable, verifiable chain.
        std::string raw = slurp(dir / "access_matrix_permissioned_bc_sdn_7.snapshot");
        auto [chain, tip] = ledger::parse_snapshot(Bytes(raw.begin(), raw.end()));
        CHECK(bool(ledger::verify_chain_blocks(chain, tip)));
    }

    SUBCASE("scenario seed list fans out") {
        netsim::ScenarioConfig cfg = sc.config;
        cfg.seeds = {1, 2};
        experiment::RunArtifacts art =
            experiment::run_scenario(cfg, std::nullopt, std::nullopt, dir.string(), false);
        REQUIRE(art.files.size() == 4);  // (csv + snapshot) x 2 seeds
        CHECK(std::count(art.summary.begin(), art.summary.end(), '\n') == 2);
        CHECK(fs::exists(dir / "access_matrix_permissioned_bc_sdn_1.csv"));
        CHECK(fs::exists(dir / "access_matrix_permissioned_bc_sdn_2.snapshot"));
    }
}

TEST_CASE("run_scenario emits a decision log when access requests flow") {
    scenario::Scenario sc =
        scenario::load_scenario(std::string(BSDN_SCENARIO_DIR) + "/fig2_small.json");
    netsim::ScenarioConfig cfg = sc.config;
    cfg.end_time = 6.0;
    fs::path dir = fresh_dir("run_decisions");
    experiment::RunArtifacts art =
        experiment::run_scenario(cfg, std::nullopt, 1, dir.string(), false);
    bool has_decisions = false;
    for (const auto& f : art.files)
        if (f.find("_decisions.csv") != std::string::npos) has_decisions = true;
    CHECK(has_decisions);
}

TEST_CASE("run_sweep medians per cell and reports blockchain reduction") {
    scenario::Scenario sc =
        scenario::load_scenario(std::string(BSDN_SCENARIO_DIR) + "/fig4_updates.json");
    netsim::ScenarioConfig cfg = sc.config;
    cfg.end_time = 6.0;
    cfg.seeds = {1};
    scenario::SweepSpec spec = *sc.sweep;
    spec.values = {100.0};

    auto rows = experiment::run_sweep(cfg, spec);
    REQUIRE(rows.size() == 1);
    const experiment::SweepCell& pub = rows[0].cells.at(netsim::ModelKind::public_bc_sdn);
    const experiment::SweepCell& perm = rows[0].cells.at(netsim::ModelKind::permissioned_bc_sdn);
    REQUIRE(pub.ok);
    REQUIRE(perm.ok);
    CHECK(pub.metric > perm.metric);
    CHECK(perm.metric > 0);
    REQUIRE(bool(rows[0].reduction_pct));
    CHECK(*rows[0].reduction_pct > 0);
    CHECK(*rows[0].reduction_pct < 100);
}

TEST_CASE("run_sweep applies attack_rate values to the flood") {
    scenario::Scenario sc =
        scenario::load_scenario(std::string(BSDN_SCENARIO_DIR) + "/fig5_dos.json");
    netsim::ScenarioConfig cfg = sc.config;
    cfg.end_time = 6.0;
    cfg.seeds = {1};
    scenario::SweepSpec spec = *sc.sweep;
    spec.values = {1000.0};
    spec.models = {netsim::ModelKind::openflow_sdn};

    auto rows = experiment::run_sweep(cfg, spec);
    REQUIRE(rows.size() == 1);
    const experiment::SweepCell& cell = rows[0].cells.at(netsim::ModelKind::openflow_sdn);
    REQUIRE(cell.ok);
    // At 1000 pps the bandwidth model halves an OpenFlow network exactly and
    // all steady samples fall inside the attack window.
    double cap = cfg.cal.capacity_bps;
    CHECK(cell.metric == doctest::Approx(0.5 * cap).epsilon(1e-9));
    CHECK(!rows[0].reduction_pct);
}

TEST_CASE("command line: run, verify and replay round trip") {
    fs::path dir = fresh_dir("cli_ok");
    std::string scn = std::string(BSDN_SCENARIO_DIR) + "/access_matrix.json";
    REQUIRE(cli("run " + scn + " --seed 3 --out " + dir.string()) == 0);
    fs::path snap = dir / "access_matrix_permissioned_bc_sdn_3.snapshot";
    CHECK(fs::exists(dir / "access_matrix_permissioned_bc_sdn_3.csv"));
    CHECK(fs::exists(dir / "access_matrix_summary.txt"));
    REQUIRE(fs::exists(snap));

    CHECK(cli("verify " + snap.string()) == 0);
    CHECK(cli("replay " + snap.string()) == 0);

    SUBCASE("truncated snapshot is a format error") {
        std::string raw = slurp(snap);
        spit(dir / "short.snapshot", raw.substr(0, 10));
        CHECK(cli("verify " + (dir / "short.snapshot").string()) == 2);
    }
    SUBCASE("bad magic is a format error") {
        std::string raw = slurp(snap);
        raw[0] = 'X';
        spit(dir / "magic.snapshot", raw);
        CHECK(cli("verify " + (dir / "magic.snapshot").string()) == 2);
    }
    SUBCASE("tampered tip digest is an integrity failure") {
        std::string raw = slurp(snap);
        raw[raw.size() - 5] ^= 0x01;  // inside the 32-byte tip trailer
        spit(dir / "tip.snapshot", raw);
        CHECK(cli("verify " + (dir / "tip.snapshot").string()) == 4);
        CHECK(cli("replay " + (dir / "tip.snapshot").string()) == 4);
    }
}

TEST_CASE("command line: configuration errors exit 2") {
    fs::path dir = fresh_dir("cli_bad");
    CHECK(cli("run " + (dir / "absent.json").string()) == 2);

    spit(dir / "broken.json", "{not json");
    CHECK(cli("run " + (dir / "broken.json").string()) == 2);

    std::string scn = std::string(BSDN_SCENARIO_DIR) + "/access_matrix.json";
    CHECK(cli("run " + scn + " --model flowvisor --out " + dir.string()) == 2);
    // access_matrix has no sweep section.
    CHECK(cli("sweep " + scn + " --out " + dir.string()) == 2);

    CHECK(cli("") != 0);  // a subcommand is required
}

TEST_SUITE_END();
