#pragma once

// Seeded discrete-event engine and the calibrated analytic performance
// models. One run = one (scenario, model, seed) triple; everything the run
// touches (event order, rng draws, report bytes) is a pure function of
// that triple.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <queue>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "bsdn/common.hpp"
#include "bsdn/flowtable.hpp"
#include "bsdn/ledger.hpp"
#include "bsdn/protocol.hpp"

namespace bsdn::netsim {

// Thin wrapper over mt19937_64 with fixed, platform-independent mappings
// so identical seeds give identical streams everywhere (std::uniform_*
// distributions are not portable across standard libraries).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    // [0, 1), 53-bit resolution.
    double uniform01() { return static_cast<double>(eng_() >> 11) * (1.0 / 9007199254740992.0); }

    double exponential(double mean) { return -mean * std::log(1.0 - uniform01()); }

    // Inclusive range; modulo bias is irrelevant at simulation scales.
    std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi) {
        return lo + eng_() % (hi - lo + 1);
    }

    // Uniform pick from a non-empty sorted container.
    template <typename C>
    auto pick(const C& c) {
        auto it = c.begin();
        std::advance(it, static_cast<long>(uniform_int(0, c.size() - 1)));
        return *it;
    }

private:
    std::mt19937_64 eng_;
};

// (time, insertion seq) min-heap of callbacks; seq breaks ties so equal
// times run in scheduling order.
class EventQueue {
public:
    void at(SimTime t, std::function<void()> fn);
    SimTime now() const { return now_; }
    bool empty() const { return heap_.empty(); }
    // Runs every event with time <= end; the clock never goes backwards.
    void run_until(SimTime end);

private:
    struct Ev {
        SimTime t;
        std::uint64_t seq;
        std::function<void()> fn;
        bool operator>(const Ev& o) const { return t != o.t ? t > o.t : seq > o.seq; }
    };
    std::priority_queue<Ev, std::vector<Ev>, std::greater<>> heap_;
    SimTime now_ = 0;
    std::uint64_t next_seq_ = 0;
};

enum class NodeRole : std::uint8_t { controller, switch_, host, attacker };

struct Topology {
    struct Link {
        NodeId a = 0;
        NodeId b = 0;
        double latency = 0.001;       // seconds
        double capacity_bps = 1e10;
    };
    std::map<NodeId, NodeRole> nodes;
    std::vector<Link> links;

    std::vector<NodeId> with_role(NodeRole r) const;
};

Decision validate_topology(const Topology& t);  // connected, >= 1 controller

// All-pairs shortest path latency (Dijkstra per node; graphs are small).
struct Latencies {
    std::map<NodeId, std::map<NodeId, double>> dist;
    double max_latency = 0;  // max finite pairwise distance

    double at(NodeId a, NodeId b) const { return dist.at(a).at(b); }
};

Latencies all_pairs_latency(const Topology& t);

struct AttackProfile {
    double flood_rate = 0;          // packets/s across all sources
    std::uint32_t packet_size = 512;
    double start = 0;
    double stop = 0;
    std::vector<NodeId> sources;    // unregistered attacker identities
};

enum class ModelKind : std::uint8_t { permissioned_bc_sdn, public_bc_sdn, openflow_sdn };

std::string model_name(ModelKind m);
std::optional<ModelKind> model_from_name(const std::string& s);
std::vector<ModelKind> all_models();

// Every constant behind the analytic curves lives here and is
// scenario-overridable.
struct Calibration {
    double capacity_bps = 2.1e9;  // C: clean-network bandwidth
    double s_openflow = 1000;     // attack rate at which openflow goodput = C/2
    double eps_floor = 0.05;      // collapsed-controller goodput floor, fraction of C
    double fail_rate = 3000;      // sustained rate that collapses the openflow controller
    double fail_window = 5;       // W: seconds of sustained overload before collapse
    double fail_tau = 2;          // collapse decay time constant
    double delta_max = 0.04;      // permissioned validation overhead ceiling
    double delta_half = 3000;     // attack rate at half the overhead ceiling
    double t_pow = 10;            // public-chain mean block interval
    int n_conf = 6;               // public-chain confirmations required
    double mu_pub = 0.1;          // public-chain service rate, blocks/s
    double mu_perm = 50;          // permissioned service rate, blocks/s
    std::size_t batch_perm = 64;  // flow updates per permissioned block
    std::size_t batch_pub = 10000;
    double pub_lag = 60;          // n_conf * t_pow: rule-confirmation lag
};

// Legitimate goodput (bits/s) under a constant-rate attack that started at
// attack_start; t is absolute sim time. attack_rate = 0 returns C for all
// models.
double bandwidth_model(ModelKind model, double attack_rate, double t, double attack_start,
                       const Calibration& cal);

// One flow-update confirmation latency sample. rtt = round trip between
// requester and proposer; quorum_round = one vote round among controllers.
// Draws randomness only for the public model.
double confirmation_latency(ModelKind model, double packet_in_rate, Rng& rng,
                            const Calibration& cal, double rtt, double quorum_round);

struct Sample {
    SimTime t = 0;
    double goodput_bps = 0;
    double update_latency_s = 0;
    std::uint64_t ctrl_queue = 0;
    std::uint64_t accepted = 0;
    std::uint64_t rejected = 0;
};

struct MetricsReport {
    std::vector<Sample> samples;
    double mean_goodput = 0;
    double mean_update_latency = 0;   // over drawn samples, 0 if none
    std::uint64_t total_accepted = 0;
    std::uint64_t total_rejected = 0;

    std::string to_csv() const;  // header + one row per sample
};

// Mean goodput over the final quarter of samples, the per-run value used
// in attack-rate sweeps.
double steady_goodput(const MetricsReport& m);

struct WorkloadConfig {
    double flow_update_rate = 0;     // ledger FRT-update submissions per second
    double access_request_rate = 0;  // user access requests per second
    double packet_in_rate = 0;       // confirmation-latency sampling rate
};

// A device that submits admissions for itself without checking capacity;
// the quorum is the only guard.
struct GreedyServer {
    NodeId device = 0;
    UserId user = 0;
    TaskId task = 0;
    double rate = 0;  // submissions per second, 0 = disabled
};

struct ScenarioConfig {
    std::string name;
    Topology topo;
    ledger::GenesisRecord genesis;
    ModelKind model = ModelKind::permissioned_bc_sdn;
    double end_time = 10;
    double sample_interval = 0.5;
    double loss_prob = 0;
    double legit_rate_bps = 2.1e9;  // offered legitimate load
    double poll_interval = 0;       // periodic version-check broadcasts; 0 = off
    WorkloadConfig workload;
    AttackProfile attack;
    GreedyServer greedy;
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
    std::vector<NodeId> crashed_controllers;
    Calibration cal;
    ledger::LedgerConfig ledger_cfg;
    int challenge_peers = protocol::kChallengePeers;
    int max_attempts = protocol::kMaxAttempts;
    double t_req_factor = 4.0;  // T_req = factor * max path latency
};

struct AdoptionEvent {
    SimTime time = 0;
    NodeId switch_id = 0;
    std::uint32_t version = 0;
};

struct ProtocolStats {
    SimTime last_frt_commit = 0;  // commit time of the last flow-rule update
    bool all_converged = false;   // every switch ended on its ledger version
    SimTime converged_at = 0;     // when the last switch got there
    int max_attempts_used = 0;
    std::vector<AdoptionEvent> adoptions;
};

struct TraceRow {
    SimTime t = 0;
    NodeId src = 0;
    NodeId dst = 0;
    std::string msg_type;
    std::uint32_t version = 0;
    std::string hash_prefix;
};

struct DecisionRow {
    SimTime t = 0;
    UserId user = 0;
    NodeId device = 0;
    TaskId task = 0;
    bool allowed = false;
    std::string reason_or_policy;  // policy id when allowed, deny reason otherwise
};

struct RunResult {
    MetricsReport metrics;
    ledger::Ledger ledger;
    ProtocolStats protocol;
    std::vector<TraceRow> trace;        // filled only when requested
    std::vector<DecisionRow> decisions;
    std::uint64_t attack_arrivals = 0;
    std::uint64_t attack_rejected = 0;  // dropped by ledger-backed admission
};

// Executes one deterministic run. Throws std::invalid_argument on a
// scenario that fails validation.
RunResult run(const ScenarioConfig& sc, std::uint64_t seed, bool with_trace = false);

std::string trace_to_csv(const std::vector<TraceRow>& rows);
std::string decisions_to_csv(const std::vector<DecisionRow>& rows);

}  // namespace bsdn::netsim
