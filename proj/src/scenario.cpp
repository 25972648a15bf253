#include "bsdn/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace bsdn::scenario {

using nlohmann::json;

namespace {

const json& need(const json& j, const char* key, const std::string& path) {
    auto it = j.find(key);
    if (it == j.end()) throw ConfigError(path + "." + key, "missing");
    return *it;
}

double need_num(const json& j, const char* key, const std::string& path) {
    const json& v = need(j, key, path);
    if (!v.is_number()) throw ConfigError(path + "." + key, "must be a number");
    return v.get<double>();
}

std::uint64_t need_id(const json& j, const char* key, const std::string& path) {
    const json& v = need(j, key, path);
    if (!v.is_number_unsigned()) throw ConfigError(path + "." + key, "must be a non-negative integer");
    return v.get<std::uint64_t>();
}

std::string need_str(const json& j, const char* key, const std::string& path) {
    const json& v = need(j, key, path);
    if (!v.is_string()) throw ConfigError(path + "." + key, "must be a string");
    return v.get<std::string>();
}

double opt_num(const json& j, const char* key, double def, const std::string& path) {
    auto it = j.find(key);
    if (it == j.end()) return def;
    if (!it->is_number()) throw ConfigError(path + "." + key, "must be a number");
    return it->get<double>();
}

netsim::ModelKind parse_model(const std::string& s, const std::string& path) {
    auto m = netsim::model_from_name(s);
    if (!m)
        throw ConfigError(path, "unknown model '" + s +
                                    "' (valid: permissioned_bc_sdn, public_bc_sdn, openflow_sdn)");
    return *m;
}

access::AttrConstraint parse_constraint(const json& j, const std::string& path) {
    if (!j.is_object() || j.size() != 1)
        throw ConfigError(path, "must be an object with exactly one of role/org/clearance_min");
    access::AttrConstraint c;
    if (j.contains("role")) {
        c.kind = access::AttrConstraint::Kind::role_eq;
        auto r = access::role_from_name(need_str(j, "role", path));
        if (!r) throw ConfigError(path + ".role", "unknown role (valid: operator, auditor, admin)");
        c.role = *r;
    } else if (j.contains("org")) {
        c.kind = access::AttrConstraint::Kind::org_eq;
        c.org = need_str(j, "org", path);
    } else if (j.contains("clearance_min")) {
        c.kind = access::AttrConstraint::Kind::clearance_min;
        c.clearance = static_cast<std::uint32_t>(need_id(j, "clearance_min", path));
    } else {
        throw ConfigError(path, "must contain one of role/org/clearance_min");
    }
    return c;
}

}  // namespace

Scenario parse_scenario(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError("<root>", std::string("not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("<root>", "must be a JSON object");

    Scenario sc;
    netsim::ScenarioConfig& c = sc.config;
    c.name = need_str(j, "name", "<root>");
    c.end_time = need_num(j, "end_time", "<root>");
    if (!(c.end_time > 0)) throw ConfigError("end_time", "must be positive");
    c.sample_interval = opt_num(j, "sample_interval", 0.5, "<root>");
    if (!(c.sample_interval > 0)) throw ConfigError("sample_interval", "must be positive");
    c.loss_prob = opt_num(j, "loss_prob", 0.0, "<root>");
    if (c.loss_prob < 0 || c.loss_prob >= 1) throw ConfigError("loss_prob", "must be in [0, 1)");
    c.poll_interval = opt_num(j, "poll_interval", 0.0, "<root>");

    if (j.contains("model")) c.model = parse_model(need_str(j, "model", "<root>"), "model");

    if (j.contains("seeds")) {
        const json& s = j["seeds"];
        if (!s.is_array() || s.empty()) throw ConfigError("seeds", "must be a non-empty array");
        c.seeds.clear();
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (!s[i].is_number_unsigned())
                throw ConfigError("seeds[" + std::to_string(i) + "]", "must be a non-negative integer");
            c.seeds.push_back(s[i].get<std::uint64_t>());
        }
    }

    // -- topology + genesis --
    const json& topo = need(j, "topology", "<root>");
    const json& ctls = need(topo, "controllers", "topology");
    if (!ctls.is_array() || ctls.empty())
        throw ConfigError("topology.controllers", "must be a non-empty array");
    for (const auto& v : ctls) {
        NodeId id = v.get<NodeId>();
        c.topo.nodes[id] = netsim::NodeRole::controller;
        c.genesis.controllers.push_back(id);
    }
    const json& sws = need(topo, "switches", "topology");
    if (!sws.is_array() || sws.empty())
        throw ConfigError("topology.switches", "must be a non-empty array");
    for (const auto& v : sws) {
        NodeId id = v.get<NodeId>();
        c.topo.nodes[id] = netsim::NodeRole::switch_;
        c.genesis.switches.push_back(id);
    }
    if (topo.contains("hosts")) {
        const json& hosts = topo["hosts"];
        for (std::size_t i = 0; i < hosts.size(); ++i) {
            std::string path = "topology.hosts[" + std::to_string(i) + "]";
            ledger::GenesisRecord::Host h;
            h.id = need_id(hosts[i], "id", path);
            h.server = need_id(hosts[i], "server", path);
            h.capacity = static_cast<LoadUnits>(need_id(hosts[i], "capacity", path));
            c.topo.nodes[h.id] = netsim::NodeRole::host;
            c.topo.links.push_back(
                {h.id, h.server, opt_num(hosts[i], "latency", 0.0005, path), 1e10});
            c.genesis.hosts.push_back(h);
        }
    }
    if (topo.contains("attackers")) {
        const json& atk = topo["attackers"];
        for (std::size_t i = 0; i < atk.size(); ++i) {
            std::string path = "topology.attackers[" + std::to_string(i) + "]";
            NodeId id = need_id(atk[i], "id", path);
            NodeId attach = need_id(atk[i], "attach", path);
            c.topo.nodes[id] = netsim::NodeRole::attacker;
            c.topo.links.push_back({id, attach, opt_num(atk[i], "latency", 0.001, path), 1e10});
        }
    }
    const json& links = need(topo, "links", "topology");
    if (!links.is_array()) throw ConfigError("topology.links", "must be an array");
    for (std::size_t i = 0; i < links.size(); ++i) {
        std::string path = "topology.links[" + std::to_string(i) + "]";
        netsim::Topology::Link l;
        l.a = need_id(links[i], "a", path);
        l.b = need_id(links[i], "b", path);
        l.latency = need_num(links[i], "latency", path);
        l.capacity_bps = opt_num(links[i], "capacity_bps", 1e10, path);
        if (!(l.latency > 0)) throw ConfigError(path + ".latency", "must be positive");
        c.topo.links.push_back(l);
    }
    if (Decision d = netsim::validate_topology(c.topo); !d)
        throw ConfigError("topology", d.reason);

    if (j.contains("users")) {
        const json& users = j["users"];
        for (std::size_t i = 0; i < users.size(); ++i) {
            std::string path = "users[" + std::to_string(i) + "]";
            access::UserAttributes u;
            u.user_id = need_id(users[i], "id", path);
            auto r = access::role_from_name(need_str(users[i], "role", path));
            if (!r) throw ConfigError(path + ".role", "unknown role (valid: operator, auditor, admin)");
            u.role = *r;
            u.org = need_str(users[i], "org", path);
            u.clearance = static_cast<std::uint32_t>(need_id(users[i], "clearance", path));
            c.genesis.users.push_back(u);
        }
    }
    if (j.contains("tasks")) {
        const json& tasks = j["tasks"];
        for (std::size_t i = 0; i < tasks.size(); ++i) {
            std::string path = "tasks[" + std::to_string(i) + "]";
            loadbal::TaskKind t;
            t.id = need_id(tasks[i], "id", path);
            t.cost = static_cast<LoadUnits>(need_id(tasks[i], "cost", path));
            t.duration = need_num(tasks[i], "duration", path);
            if (t.cost < 1) throw ConfigError(path + ".cost", "must be >= 1");
            if (!(t.duration > 0)) throw ConfigError(path + ".duration", "must be positive");
            c.genesis.tasks.push_back(t);
        }
    }
    // A task must fit every device, otherwise some requests can never be
    // admitted anywhere and the scenario is silently lame.
    if (!c.genesis.hosts.empty() && !c.genesis.tasks.empty()) {
        LoadUnits min_cap = std::numeric_limits<LoadUnits>::max();
        for (const auto& h : c.genesis.hosts) min_cap = std::min(min_cap, h.capacity);
        for (std::size_t i = 0; i < c.genesis.tasks.size(); ++i)
            if (c.genesis.tasks[i].cost > min_cap)
                throw ConfigError("tasks[" + std::to_string(i) + "].cost",
                                  "exceeds the smallest device capacity");
    }
    if (j.contains("policies")) {
        const json& pols = j["policies"];
        for (std::size_t i = 0; i < pols.size(); ++i) {
            std::string path = "policies[" + std::to_string(i) + "]";
            access::AccessPolicy p;
            p.policy_id = need_id(pols[i], "id", path);
            p.owner = need_id(pols[i], "owner", path);
            p.device_id = need_id(pols[i], "device", path);
            if (pols[i].contains("require")) {
                const json& req = pols[i]["require"];
                for (std::size_t k = 0; k < req.size(); ++k)
                    p.required_attrs.push_back(
                        parse_constraint(req[k], path + ".require[" + std::to_string(k) + "]"));
            }
            const json& pt = need(pols[i], "tasks", path);
            if (!pt.is_array() || pt.empty())
                throw ConfigError(path + ".tasks", "must be a non-empty array");
            for (const auto& v : pt) p.allowed_tasks.insert(v.get<TaskId>());
            p.active = pols[i].value("active", true);
            c.genesis.policies.push_back(p);
        }
    }
    if (j.contains("initial_tables")) {
        const json& tables = j["initial_tables"];
        if (!tables.is_object()) throw ConfigError("initial_tables", "must be an object");
        for (const auto& [key, lines] : tables.items()) {
            std::string path = "initial_tables." + key;
            NodeId sw = 0;
            try {
                sw = std::stoull(key);
            } catch (...) {
                throw ConfigError(path, "key must be a switch id");
            }
            if (!lines.is_array()) throw ConfigError(path, "must be an array of entry lines");
            auto& entries = c.genesis.initial_tables[sw];
            for (std::size_t i = 0; i < lines.size(); ++i) {
                try {
                    entries.push_back(flowtable::parse_entry(lines[i].get<std::string>(), i + 1));
                } catch (const std::exception& e) {
                    throw ConfigError(path + "[" + std::to_string(i) + "]", e.what());
                }
            }
        }
    }

    // Whole-genesis semantic check (duplicate ids, dangling references).
    try {
        (void)ledger::Ledger::create(c.genesis, c.ledger_cfg);
    } catch (const std::invalid_argument& e) {
        throw ConfigError("genesis", e.what());
    }

    // -- optional sections --
    if (j.contains("workload")) {
        const json& w = j["workload"];
        c.workload.flow_update_rate = opt_num(w, "flow_update_rate", 0, "workload");
        c.workload.access_request_rate = opt_num(w, "access_request_rate", 0, "workload");
        c.workload.packet_in_rate = opt_num(w, "packet_in_rate", 0, "workload");
        if (c.workload.flow_update_rate < 0 || c.workload.access_request_rate < 0 ||
            c.workload.packet_in_rate < 0)
            throw ConfigError("workload", "rates must be non-negative");
    }
    c.legit_rate_bps = opt_num(j, "legit_rate_bps", c.cal.capacity_bps, "<root>");
    if (c.legit_rate_bps < 0) throw ConfigError("legit_rate_bps", "must be non-negative");

    if (j.contains("attack")) {
        const json& a = j["attack"];
        c.attack.flood_rate = opt_num(a, "flood_rate", 0, "attack");
        if (c.attack.flood_rate < 0) throw ConfigError("attack.flood_rate", "must be non-negative");
        c.attack.packet_size = static_cast<std::uint32_t>(opt_num(a, "packet_size", 512, "attack"));
        c.attack.start = opt_num(a, "start", 0, "attack");
        c.attack.stop = opt_num(a, "stop", c.end_time, "attack");
        if (a.contains("sources")) {
            for (const auto& v : a["sources"]) {
                NodeId id = v.get<NodeId>();
                auto it = c.topo.nodes.find(id);
                if (it == c.topo.nodes.end() || it->second != netsim::NodeRole::attacker)
                    throw ConfigError("attack.sources", "id " + std::to_string(id) +
                                                            " is not an attacker node");
                c.attack.sources.push_back(id);
            }
        }
        if (c.attack.flood_rate > 0 && c.attack.sources.empty())
            throw ConfigError("attack.sources", "required when flood_rate > 0");
    }

    if (j.contains("greedy")) {
        const json& g = j["greedy"];
        c.greedy.device = need_id(g, "device", "greedy");
        c.greedy.user = need_id(g, "user", "greedy");
        c.greedy.task = need_id(g, "task", "greedy");
        c.greedy.rate = need_num(g, "rate", "greedy");
        if (c.greedy.rate < 0) throw ConfigError("greedy.rate", "must be non-negative");
        if (c.greedy.rate > 0) {
            bool dev_ok = std::any_of(c.genesis.hosts.begin(), c.genesis.hosts.end(),
                                      [&](const auto& h) { return h.id == c.greedy.device; });
            if (!dev_ok) throw ConfigError("greedy.device", "not a device in this scenario");
        }
    }

    if (j.contains("calibration")) {
        const json& k = j["calibration"];
        netsim::Calibration& cal = c.cal;
        cal.capacity_bps = opt_num(k, "capacity_bps", cal.capacity_bps, "calibration");
        cal.s_openflow = opt_num(k, "s_openflow", cal.s_openflow, "calibration");
        cal.eps_floor = opt_num(k, "eps_floor", cal.eps_floor, "calibration");
        cal.fail_rate = opt_num(k, "fail_rate", cal.fail_rate, "calibration");
        cal.fail_window = opt_num(k, "fail_window", cal.fail_window, "calibration");
        cal.fail_tau = opt_num(k, "fail_tau", cal.fail_tau, "calibration");
        cal.delta_max = opt_num(k, "delta_max", cal.delta_max, "calibration");
        cal.delta_half = opt_num(k, "delta_half", cal.delta_half, "calibration");
        cal.t_pow = opt_num(k, "t_pow", cal.t_pow, "calibration");
        cal.n_conf = static_cast<int>(opt_num(k, "n_conf", cal.n_conf, "calibration"));
        cal.mu_pub = opt_num(k, "mu_pub", cal.mu_pub, "calibration");
        cal.mu_perm = opt_num(k, "mu_perm", cal.mu_perm, "calibration");
        cal.batch_perm =
            static_cast<std::size_t>(opt_num(k, "batch_perm", cal.batch_perm, "calibration"));
        cal.batch_pub =
            static_cast<std::size_t>(opt_num(k, "batch_pub", cal.batch_pub, "calibration"));
        cal.pub_lag = opt_num(k, "pub_lag", cal.pub_lag, "calibration");
        if (!(cal.capacity_bps > 0)) throw ConfigError("calibration.capacity_bps", "must be positive");
    }

    if (j.contains("ledger")) {
        const json& l = j["ledger"];
        c.ledger_cfg.block_interval = opt_num(l, "block_interval", 1.0, "ledger");
        c.ledger_cfg.max_block_tx =
            static_cast<std::size_t>(opt_num(l, "max_block_tx", 64, "ledger"));
        if (!(c.ledger_cfg.block_interval > 0))
            throw ConfigError("ledger.block_interval", "must be positive");
        if (c.ledger_cfg.max_block_tx < 1) throw ConfigError("ledger.max_block_tx", "must be >= 1");
    }

    if (j.contains("protocol")) {
        const json& p = j["protocol"];
        c.challenge_peers = static_cast<int>(opt_num(p, "challenge_peers", 3, "protocol"));
        c.max_attempts = static_cast<int>(opt_num(p, "max_attempts", 8, "protocol"));
        c.t_req_factor = opt_num(p, "t_req_factor", 4.0, "protocol");
        if (c.challenge_peers < 1) throw ConfigError("protocol.challenge_peers", "must be >= 1");
        if (c.max_attempts < 1) throw ConfigError("protocol.max_attempts", "must be >= 1");
        if (!(c.t_req_factor > 0)) throw ConfigError("protocol.t_req_factor", "must be positive");
    }

    if (j.contains("crashed_controllers")) {
        for (const auto& v : j["crashed_controllers"]) {
            NodeId id = v.get<NodeId>();
            if (std::find(c.genesis.controllers.begin(), c.genesis.controllers.end(), id) ==
                c.genesis.controllers.end())
                throw ConfigError("crashed_controllers", std::to_string(id) + " is not a controller");
            c.crashed_controllers.push_back(id);
        }
    }

    if (j.contains("sweep")) {
        const json& s = j["sweep"];
        SweepSpec spec;
        spec.parameter = need_str(s, "parameter", "sweep");
        if (spec.parameter != "attack_rate" && spec.parameter != "packet_in_rate")
            throw ConfigError("sweep.parameter", "must be attack_rate or packet_in_rate");
        const json& vals = need(s, "values", "sweep");
        if (!vals.is_array() || vals.empty())
            throw ConfigError("sweep.values", "must be a non-empty array");
        for (const auto& v : vals) spec.values.push_back(v.get<double>());
        const json& models = need(s, "models", "sweep");
        if (!models.is_array() || models.empty())
            throw ConfigError("sweep.models", "must be a non-empty array");
        for (std::size_t i = 0; i < models.size(); ++i)
            spec.models.push_back(parse_model(models[i].get<std::string>(),
                                              "sweep.models[" + std::to_string(i) + "]"));
        sc.sweep = std::move(spec);
    }

    return sc;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("<file>", "cannot open " + path);
    std::ostringstream buf;
    buf << f.rdbuf();
    return parse_scenario(buf.str());
}

}  // namespace bsdn::scenario
