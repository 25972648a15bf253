#include "bsdn/netsim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "bsdn/access.hpp"
#include "bsdn/loadbal.hpp"

namespace bsdn::netsim {

// ---- event queue ----

void EventQueue::at(SimTime t, std::function<void()> fn) {
    if (t < now_) t = now_;
    heap_.push(Ev{t, next_seq_++, std::move(fn)});
}

void EventQueue::run_until(SimTime end) {
    while (!heap_.empty() && heap_.top().t <= end) {
        Ev ev = heap_.top();
        heap_.pop();
        now_ = ev.t;
        ev.fn();
    }
    now_ = end;
}

// ---- topology ----

std::vector<NodeId> Topology::with_role(NodeRole r) const {
    std::vector<NodeId> out;
    for (const auto& [id, role] : nodes)
        if (role == r) out.push_back(id);
    return out;
}

Decision validate_topology(const Topology& t) {
    if (t.nodes.empty()) return Decision::reject("no_nodes");
    bool has_controller = false;
    for (const auto& [id, role] : t.nodes)
        if (role == NodeRole::controller) has_controller = true;
    if (!has_controller) return Decision::reject("no_controller");
    std::map<NodeId, std::vector<NodeId>> adj;
    for (const auto& l : t.links) {
        if (!t.nodes.count(l.a) || !t.nodes.count(l.b))
            return Decision::reject("link_endpoint_unknown");
        if (!(l.latency > 0)) return Decision::reject("nonpositive_latency");
        adj[l.a].push_back(l.b);
        adj[l.b].push_back(l.a);
    }
    // BFS reachability from the first node.
    std::set<NodeId> seen{t.nodes.begin()->first};
    std::vector<NodeId> frontier{t.nodes.begin()->first};
    while (!frontier.empty()) {
        NodeId n = frontier.back();
        frontier.pop_back();
        for (NodeId m : adj[n])
            if (seen.insert(m).second) frontier.push_back(m);
    }
    if (seen.size() != t.nodes.size()) return Decision::reject("disconnected");
    return Decision::accept();
}

Latencies all_pairs_latency(const Topology& t) {
    constexpr double kInf = std::numeric_limits<double>::infinity();
    std::map<NodeId, std::vector<std::pair<NodeId, double>>> adj;
    for (const auto& l : t.links) {
        adj[l.a].push_back({l.b, l.latency});
        adj[l.b].push_back({l.a, l.latency});
    }
    Latencies out;
    for (const auto& [src, _] : t.nodes) {
        auto& d = out.dist[src];
        for (const auto& [n, __] : t.nodes) d[n] = kInf;
        d[src] = 0;
        // Dijkstra on a handful of nodes; a simple heap suffices.
        using Item = std::pair<double, NodeId>;
        std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
        pq.push({0, src});
        while (!pq.empty()) {
            auto [dist, n] = pq.top();
            pq.pop();
            if (dist > d[n]) continue;
            for (auto [m, w] : adj[n])
                if (dist + w < d[m]) {
                    d[m] = dist + w;
                    pq.push({d[m], m});
                }
        }
        for (const auto& [dst, dd] : d)
            if (dst != src && dd < kInf && dd > out.max_latency) out.max_latency = dd;
    }
    return out;
}

// ---- models ----

std::string model_name(ModelKind m) {
    switch (m) {
        case ModelKind::permissioned_bc_sdn: return "permissioned_bc_sdn";
        case ModelKind::public_bc_sdn: return "public_bc_sdn";
        case ModelKind::openflow_sdn: return "openflow_sdn";
    }
    return "unknown";
}

std::optional<ModelKind> model_from_name(const std::string& s) {
    if (s == "permissioned_bc_sdn") return ModelKind::permissioned_bc_sdn;
    if (s == "public_bc_sdn") return ModelKind::public_bc_sdn;
    if (s == "openflow_sdn") return ModelKind::openflow_sdn;
    return std::nullopt;
}

std::vector<ModelKind> all_models() {
    return {ModelKind::permissioned_bc_sdn, ModelKind::public_bc_sdn, ModelKind::openflow_sdn};
}

double bandwidth_model(ModelKind model, double attack_rate, double t, double attack_start,
                       const Calibration& cal) {
    const double C = cal.capacity_bps;
    if (attack_rate <= 0) return C;
    // Table-miss flooding: every attack packet costs a controller round.
    double openflow = C * cal.s_openflow / (cal.s_openflow + attack_rate);
    // Ledger-backed admission drops unregistered senders at the switch;
    // only the validation overhead remains.
    double perm = C * (1.0 - cal.delta_max * attack_rate / (attack_rate + cal.delta_half));
    switch (model) {
        case ModelKind::openflow_sdn: {
            if (attack_rate >= cal.fail_rate && t >= attack_start + cal.fail_window) {
                // Sustained overload: controller down, goodput decays to the floor.
                double floor = cal.eps_floor * C;
                double dt = t - attack_start - cal.fail_window;
                return floor + (openflow - floor) * std::exp(-dt / cal.fail_tau);
            }
            return openflow;
        }
        case ModelKind::permissioned_bc_sdn:
            return perm;
        case ModelKind::public_bc_sdn: {
            // Filtering rules exist but confirm slowly; the unconfirmed
            // fraction u leaves the network behaving like plain openflow.
            double since = std::max(0.0, t - attack_start);
            double u = std::exp(-since / cal.pub_lag);
            return u * openflow + (1.0 - u) * perm;
        }
    }
    return C;
}

double confirmation_latency(ModelKind model, double packet_in_rate, Rng& rng,
                            const Calibration& cal, double rtt, double quorum_round) {
    double rate = std::max(0.0, packet_in_rate);
    switch (model) {
        case ModelKind::permissioned_bc_sdn: {
            // Proposal round trip + one vote round + M/D/1 sealing queue.
            double lam = rate / static_cast<double>(cal.batch_perm);
            double rho = std::min(lam / cal.mu_perm, 0.98);
            double wq = rho > 0 ? rho / (2.0 * cal.mu_perm * (1.0 - rho)) : 0.0;
            return 2.0 * rtt + quorum_round + wq;
        }
        case ModelKind::public_bc_sdn: {
            // M/M/1 mempool wait plus n_conf exponential block intervals.
            double lam = rate / static_cast<double>(cal.batch_pub);
            double rho = std::min(lam / cal.mu_pub, 0.95);
            double w = 0;
            if (rho > 0 && rng.uniform01() < rho)
                w = rng.exponential(1.0 / (cal.mu_pub * (1.0 - rho)));
            double conf = 0;
            for (int i = 0; i < cal.n_conf; ++i) conf += rng.exponential(cal.t_pow);
            return w + conf;
        }
        case ModelKind::openflow_sdn:
            return rtt;  // plain controller acknowledgement
    }
    return 0;
}

// ---- reports ----

std::string MetricsReport::to_csv() const {
    std::string out = "t,goodput_bps,update_latency_s,ctrl_queue,accepted,rejected\n";
    char buf[160];
    for (const auto& s : samples) {
        std::snprintf(buf, sizeof(buf), "%.3f,%.3f,%.6f,%llu,%llu,%llu\n", s.t, s.goodput_bps,
                      s.update_latency_s, static_cast<unsigned long long>(s.ctrl_queue),
                      static_cast<unsigned long long>(s.accepted),
                      static_cast<unsigned long long>(s.rejected));
        out += buf;
    }
    return out;
}

double steady_goodput(const MetricsReport& m) {
    if (m.samples.empty()) return 0;
    std::size_t start = m.samples.size() - std::max<std::size_t>(1, m.samples.size() / 4);
    double sum = 0;
    for (std::size_t i = start; i < m.samples.size(); ++i) sum += m.samples[i].goodput_bps;
    return sum / static_cast<double>(m.samples.size() - start);
}

std::string trace_to_csv(const std::vector<TraceRow>& rows) {
    std::string out = "sim_time,src,dst,msg_type,version,hash_prefix8\n";
    char buf[160];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%.6f,%llu,%llu,%s,%u,%s\n", r.t,
                      static_cast<unsigned long long>(r.src), static_cast<unsigned long long>(r.dst),
                      r.msg_type.c_str(), r.version, r.hash_prefix.c_str());
        out += buf;
    }
    return out;
}

std::string decisions_to_csv(const std::vector<DecisionRow>& rows) {
    std::string out = "sim_time,user,device,task,decision,reason_or_policy\n";
    char buf[200];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%.6f,%llu,%llu,%llu,%s,%s\n", r.t,
                      static_cast<unsigned long long>(r.user),
                      static_cast<unsigned long long>(r.device),
                      static_cast<unsigned long long>(r.task), r.allowed ? "allow" : "deny",
                      r.reason_or_policy.c_str());
        out += buf;
    }
    return out;
}

// ---- run engine ----

namespace {

struct SwitchState {
    flowtable::FlowRuleTable working;
    protocol::RequesterSession ses;
};

class Engine {
public:
    Engine(const ScenarioConfig& sc, std::uint64_t seed, bool with_trace)
        : sc_(sc),
          rng_(seed),
          with_trace_(with_trace),
          led_(ledger::Ledger::create(sc.genesis, sc.ledger_cfg)),
          lat_(all_pairs_latency(sc.topo)) {
        t_req_ = sc_.t_req_factor * lat_.max_latency;
        for (NodeId c : led_.state().controllers) {
            controllers_.push_back(c);
            responders_.push_back(c);
        }
        crashed_.insert(sc_.crashed_controllers.begin(), sc_.crashed_controllers.end());
        for (const auto& [sw, frt] : led_.state().flow_tables) {
            switch_ids_.push_back(sw);
            responders_.push_back(sw);
            SwitchState st;
            st.working = frt.table;
            switches_[sw] = std::move(st);
            intended_version_[sw] = frt.table.version;
            adoptions_.push_back({0, sw, frt.table.version});
        }
        std::sort(responders_.begin(), responders_.end());
        for (const auto& [uid, _] : led_.state().users) user_ids_.push_back(uid);
        for (const auto& [dev, _] : led_.state().loads) device_ids_.push_back(dev);
        for (const auto& [tid, _] : led_.state().tasks) task_ids_.push_back(tid);
    }

    RunResult run_all() {
        schedule_sample(0);
        schedule_seal(sc_.ledger_cfg.block_interval);
        if (sc_.poll_interval > 0) schedule_poll(sc_.poll_interval);
        start_poisson(sc_.workload.flow_update_rate, 0, sc_.end_time,
                      [this] { gen_flow_update(); });
        start_poisson(sc_.workload.access_request_rate, 0, sc_.end_time,
                      [this] { gen_access_request(); });
        start_poisson(sc_.workload.packet_in_rate, 0, sc_.end_time,
                      [this] { gen_latency_sample(); });
        start_poisson(sc_.greedy.rate, 0, sc_.end_time, [this] { gen_greedy(); });
        if (sc_.attack.flood_rate > 0)
            start_poisson(sc_.attack.flood_rate, sc_.attack.start,
                          std::min(sc_.attack.stop, sc_.end_time), [this] { gen_attack_packet(); });
        q_.run_until(sc_.end_time);
        return finalize();
    }

private:
    // -- plumbing --

    bool is_controller(NodeId n) const { return led_.state().controllers.count(n) > 0; }

    double quorum_round(NodeId proposer) const {
        double m = 0;
        for (NodeId c : controllers_)
            if (c != proposer) m = std::max(m, lat_.at(proposer, c));
        return 2.0 * m;
    }

    // Loss is decided at send time; the trace records deliveries only.
    void send(NodeId src, NodeId dst, std::string type, std::uint32_t ver, const Digest& h,
              std::function<void()> handler) {
        if (sc_.loss_prob > 0 && rng_.uniform01() < sc_.loss_prob) return;
        SimTime at = q_.now() + lat_.at(src, dst);
        q_.at(at, [this, src, dst, type = std::move(type), ver, prefix = h.prefix8(), at,
                   handler = std::move(handler)] {
            if (with_trace_) trace_.push_back({at, src, dst, type, ver, prefix});
            handler();
        });
    }

    // Self-rescheduling Poisson generator over [start, stop).
    void start_poisson(double rate, SimTime start, SimTime stop, std::function<void()> fire) {
        if (rate <= 0 || stop <= start) return;
        SimTime first = start + rng_.exponential(1.0 / rate);
        schedule_poisson(first, rate, stop, std::move(fire));
    }

    void schedule_poisson(SimTime t, double rate, SimTime stop, std::function<void()> fire) {
        if (t >= stop) return;
        q_.at(t, [this, rate, stop, fire = std::move(fire)]() mutable {
            fire();
            SimTime next = q_.now() + rng_.exponential(1.0 / rate);
            schedule_poisson(next, rate, stop, std::move(fire));
        });
    }

    // -- block production --

    void schedule_seal(SimTime t) {
        if (t > sc_.end_time) return;
        q_.at(t, [this, t] {
            do_seal();
            schedule_seal(t + sc_.ledger_cfg.block_interval);
        });
    }

    void do_seal() {
        NodeId proposer = led_.designated_proposer();
        if (crashed_.count(proposer)) return;  // no progress this round
        ledger::SealResult res = led_.seal_block(q_.now());
        interval_rejected_ += res.dropped.size();
        if (!res.block) return;
        std::set<NodeId> votes;
        for (NodeId c : controllers_)
            if (!crashed_.count(c)) votes.insert(c);
        ledger::Block blk = std::move(*res.block);
        q_.at(q_.now() + quorum_round(proposer),
              [this, blk = std::move(blk), votes = std::move(votes)] { commit(blk, votes); });
    }

    void maybe_early_seal() {
        if (led_.pending().size() >= sc_.ledger_cfg.max_block_tx)
            q_.at(q_.now(), [this] { do_seal(); });
    }

    void commit(const ledger::Block& blk, const std::set<NodeId>& votes) {
        NodeId proposer = blk.proposer;
        Decision d = led_.vote_and_append(blk, votes);
        if (!d) {
            log_line(LogLevel::info, "append rejected: " + d.reason);
            return;
        }
        const ledger::Block& b = led_.chain().back();
        bool frt_changed = false;
        for (const auto& tx : b.transactions) {
            if (tx.kind == ledger::TxKind::FlowRuleUpdate) frt_changed = true;
            if (tx.kind == ledger::TxKind::LoadAdmit) {
                ++interval_accepted_;
                schedule_release(std::get<loadbal::LoadAdmitPayload>(tx.payload), tx.sim_time);
            }
        }
        if (frt_changed) last_frt_commit_ = q_.now();
        // Head announcement: every switch re-checks its table version.
        for (NodeId sw : switch_ids_)
            send(proposer, sw, "head_announce", static_cast<std::uint32_t>(b.index),
                 led_.tip_hash(), [this, sw] { on_trigger(sw); });
    }

    void schedule_release(const loadbal::LoadAdmitPayload& admit, SimTime admit_time) {
        double duration = led_.state().tasks.at(admit.request.task).duration;
        SimTime end = std::max(q_.now(), admit_time + duration);
        q_.at(end, [this, rid = admit.request_id, dev = admit.request.device] {
            ledger::Transaction tx;
            tx.id = next_tx_id_++;
            tx.kind = ledger::TxKind::LoadRelease;
            tx.issuer = controllers_.front();
            tx.sim_time = q_.now();
            tx.payload = loadbal::LoadReleasePayload{rid, dev};
            led_.submit(std::move(tx));
            maybe_early_seal();
        });
    }

    // -- reconciliation protocol --

    // A new trigger (head announcement or poll) opens a fresh episode.
    void on_trigger(NodeId sw) {
        auto& st = switches_.at(sw);
        if (st.ses.requesting) {
            st.ses.dirty = true;
            return;
        }
        st.ses.attempts = 0;
        try_initiate(sw);
    }

    void try_initiate(NodeId sw) {
        auto& st = switches_.at(sw);
        if (st.ses.requesting || st.ses.attempts >= sc_.max_attempts) return;
        std::uint64_t nonce = ++nonce_counter_;
        protocol::UpdateRequest req = protocol::make_request(st.working, nonce);
        protocol::initiate(st.ses, nonce, responders_.size() - 1, q_.now(), t_req_);
        max_attempts_used_ = std::max(max_attempts_used_, st.ses.attempts);
        for (NodeId peer : responders_) {
            if (peer == sw) continue;
            send(sw, peer, "update_request", req.frt_version, req.frt_hash,
                 [this, peer, req] { on_request(peer, req); });
        }
        q_.at(st.ses.deadline, [this, sw, nonce] {
            auto& s = switches_.at(sw);
            if (s.ses.requesting && s.ses.nonce == nonce) resolve_now(sw);
        });
    }

    void on_request(NodeId self, const protocol::UpdateRequest& req) {
        if (is_controller(self)) {
            protocol::ResponsePacket pkt = protocol::controller_respond(req, led_.state(), self);
            send_response(self, req.requester, pkt);
            return;
        }
        auto& st = switches_.at(self);
        protocol::SwitchRespondOutcome out =
            protocol::switch_respond(req, st.working, led_.state(), self);
        if (out.challenge) {
            start_challenge(self, std::move(*out.challenge));
            return;
        }
        if (out.reply) send_response(self, req.requester, *out.reply);
    }

    void send_response(NodeId from, NodeId to, const protocol::ResponsePacket& pkt) {
        send(from, to, protocol::body_name(pkt.body), protocol::body_version(pkt.body),
             protocol::body_hash(pkt.body), [this, to, pkt] { on_response(to, pkt); });
    }

    void start_challenge(NodeId self, protocol::HashChallenge c) {
        std::vector<NodeId> peers;
        for (NodeId n : responders_) {
            if (n == self || n == c.requester) continue;
            peers.push_back(n);
            if (peers.size() == static_cast<std::size_t>(sc_.challenge_peers)) break;
        }
        c.expected = peers.size();
        auto key = std::pair<NodeId, std::uint64_t>{self, c.nonce};
        NodeId target = c.target_switch;
        std::uint32_t ver = c.target_version;
        Digest claimed = c.claimed;
        challenges_[key] = std::move(c);
        for (NodeId p : peers) {
            send(self, p, "challenge", ver, claimed, [this, self, p, key, target, ver] {
                Digest d = protocol::ledger_hash(led_.state(), target, ver);
                send(p, self, "challenge_reply", ver, d,
                     [this, key, p, d] { on_challenge_reply(key, p, d); });
            });
        }
        if (peers.empty()) {
            finish_challenge(key);
            return;
        }
        q_.at(q_.now() + t_req_ / 2, [this, key] {
            if (challenges_.count(key)) finish_challenge(key);
        });
    }

    void on_challenge_reply(std::pair<NodeId, std::uint64_t> key, NodeId from, const Digest& d) {
        auto it = challenges_.find(key);
        if (it == challenges_.end()) return;  // already finished or timed out
        it->second.responses[from] = d;
        if (it->second.responses.size() >= it->second.expected) finish_challenge(key);
    }

    void finish_challenge(std::pair<NodeId, std::uint64_t> key) {
        auto it = challenges_.find(key);
        if (it == challenges_.end()) return;
        protocol::HashChallenge c = std::move(it->second);
        challenges_.erase(it);
        protocol::ResponsePacket pkt = protocol::complete_challenge(c, c.challenger, led_.state());
        send_response(c.challenger, c.requester, pkt);
    }

    void on_response(NodeId sw, const protocol::ResponsePacket& pkt) {
        auto& st = switches_.at(sw);
        if (std::holds_alternative<protocol::NeedTable>(pkt.body)) {
            // The responder is behind: ship it our current table.
            protocol::UpdateRequest full = protocol::make_request(st.working, pkt.nonce);
            full.full_table = st.working;
            send(sw, pkt.responder, "full_table", st.working.version,
                 flowtable::table_hash(st.working),
                 [this, responder = pkt.responder, full] { on_full_table(responder, full); });
        }
        if (!st.ses.requesting || pkt.nonce != st.ses.nonce) return;  // stale attempt
        st.ses.responses.push_back(pkt);
        if (st.ses.responses.size() >= st.ses.expected) resolve_now(sw);
    }

    void on_full_table(NodeId self, const protocol::UpdateRequest& req) {
        auto& st = switches_.at(self);
        if (!req.full_table) return;
        if (auto adopted = protocol::adopt_offered(st.working, *req.full_table, led_.state())) {
            st.working = std::move(*adopted);
            adoptions_.push_back({q_.now(), self, st.working.version});
        }
    }

    void resolve_now(NodeId sw) {
        auto& st = switches_.at(sw);
        protocol::ResolveResult res = protocol::resolve(st.working, st.ses.responses, led_.state());
        bool rerun = st.ses.dirty;
        st.ses.dirty = false;
        protocol::finish(st.ses, res.success);
        if (res.changed) {
            st.working = std::move(res.table);
            adoptions_.push_back({q_.now(), sw, st.working.version});
        }
        if (res.success) {
            if (rerun) try_initiate(sw);
        } else if (st.ses.attempts < sc_.max_attempts) {
            double delay = protocol::backoff_delay(t_req_, st.ses.failures);
            q_.at(q_.now() + delay, [this, sw] { try_initiate(sw); });
        }
    }

    void schedule_poll(SimTime t) {
        if (t > sc_.end_time) return;
        q_.at(t, [this, t] {
            for (NodeId sw : switch_ids_) on_trigger(sw);
            schedule_poll(t + sc_.poll_interval);
        });
    }

    // -- workloads --

    void gen_flow_update() {
        if (switch_ids_.empty() || controllers_.empty()) return;
        NodeId sw = rng_.pick(switch_ids_);
        NodeId issuer = rng_.pick(controllers_);
        flowtable::FlowRuleUpdatePayload p;
        p.switch_id = sw;
        p.base_version = intended_version_.at(sw);
        flowtable::MatchFields m;
        m.ip_dst = flowtable::IpPrefix{static_cast<std::uint32_t>(rng_.next_u64()), 32};
        flowtable::FlowEntry e(next_entry_id_++,
                               static_cast<std::uint16_t>(rng_.uniform_int(1, 100)), m,
                               {flowtable::ActionForward{
                                   static_cast<std::uint16_t>(rng_.uniform_int(1, 8))}});
        p.ops.push_back(flowtable::OpAdd{std::move(e)});
        ledger::Transaction tx;
        tx.id = next_tx_id_++;
        tx.kind = ledger::TxKind::FlowRuleUpdate;
        tx.issuer = issuer;
        tx.sim_time = q_.now();
        tx.payload = std::move(p);
        if (led_.submit(std::move(tx))) intended_version_.at(sw) += 1;
        maybe_early_seal();
    }

    void gen_access_request() {
        if (user_ids_.empty() || device_ids_.empty() || task_ids_.empty()) return;
        access::AccessRequest req;
        req.user = rng_.pick(user_ids_);
        req.device = rng_.pick(device_ids_);
        req.task = rng_.pick(task_ids_);
        req.sim_time = q_.now();
        access::EvalResult ev = access::evaluate_request(req, led_.state());
        decisions_.push_back({q_.now(), req.user, req.device, req.task, ev.allowed,
                              ev.allowed ? std::to_string(ev.policy_id) : ev.deny_reason});
        if (!ev.allowed) {
            ++interval_rejected_;
            return;
        }
        submit_admit(req, rng_.pick(controllers_));
    }

    void gen_greedy() {
        access::AccessRequest req;
        req.user = sc_.greedy.user;
        req.device = sc_.greedy.device;
        req.task = sc_.greedy.task;
        req.sim_time = q_.now();
        // The greedy server skips every local check and goes straight to
        // the quorum.
        submit_admit(req, sc_.greedy.device);
    }

    void submit_admit(const access::AccessRequest& req, NodeId issuer) {
        ledger::Transaction tx;
        tx.id = next_tx_id_++;
        tx.kind = ledger::TxKind::LoadAdmit;
        tx.issuer = issuer;
        tx.sim_time = q_.now();
        tx.payload = loadbal::LoadAdmitPayload{next_request_id_++, req};
        led_.submit(std::move(tx));
        maybe_early_seal();
    }

    void gen_latency_sample() {
        if (switch_ids_.empty() || controllers_.empty()) return;
        NodeId s = rng_.pick(switch_ids_);
        NodeId c = rng_.pick(controllers_);
        double rtt = 2.0 * lat_.at(s, c);
        double v = confirmation_latency(sc_.model, sc_.workload.packet_in_rate, rng_, sc_.cal,
                                        rtt, quorum_round(c));
        interval_lat_sum_ += v;
        interval_lat_count_ += 1;
        run_lat_sum_ += v;
        run_lat_count_ += 1;
    }

    void gen_attack_packet() {
        ++attack_arrivals_;
        if (switch_ids_.empty()) return;
        NodeId target = rng_.pick(switch_ids_);
        NodeId src = sc_.attack.sources.empty()
                         ? NodeId{0}
                         : sc_.attack.sources[rng_.uniform_int(0, sc_.attack.sources.size() - 1)];
        if (sc_.model == ModelKind::permissioned_bc_sdn && !led_.state().principals.count(src)) {
            ++attack_rejected_;  // unregistered sender, dropped at the switch
            return;
        }
        flowtable::Packet pkt;
        pkt.ip_src = static_cast<std::uint32_t>(src * 2654435761u);
        pkt.ip_dst = static_cast<std::uint32_t>(target * 2654435761u);
        pkt.ip_proto = 17;
        pkt.l4_dst = static_cast<std::uint16_t>(rng_.uniform_int(1024, 65535));
        pkt.size_bytes = sc_.attack.packet_size;
        pkt.cls = flowtable::Packet::Class::attack;
        flowtable::match_packet(switches_.at(target).working, pkt);
    }

    // -- metrics --

    void schedule_sample(SimTime t) {
        if (t > sc_.end_time) return;
        q_.at(t, [this, t] {
            do_sample();
            schedule_sample(t + sc_.sample_interval);
        });
    }

    double current_goodput() const {
        double t = q_.now();
        const AttackProfile& a = sc_.attack;
        double v = sc_.cal.capacity_bps;
        if (a.flood_rate > 0 && t >= a.start && t < a.stop)
            v = bandwidth_model(sc_.model, a.flood_rate, t, a.start, sc_.cal);
        return std::min({v, sc_.legit_rate_bps, sc_.cal.capacity_bps});
    }

    void do_sample() {
        Sample s;
        s.t = q_.now();
        s.goodput_bps = current_goodput();
        if (interval_lat_count_ > 0) {
            last_latency_ = interval_lat_sum_ / static_cast<double>(interval_lat_count_);
            interval_lat_sum_ = 0;
            interval_lat_count_ = 0;
        }
        s.update_latency_s = last_latency_;
        s.ctrl_queue = led_.pending().size();
        s.accepted = interval_accepted_;
        s.rejected = interval_rejected_;
        interval_accepted_ = 0;
        interval_rejected_ = 0;
        metrics_.samples.push_back(s);
    }

    RunResult finalize() {
        RunResult res;
        double gsum = 0;
        for (const auto& s : metrics_.samples) {
            gsum += s.goodput_bps;
            metrics_.total_accepted += s.accepted;
            metrics_.total_rejected += s.rejected;
        }
        metrics_.mean_goodput =
            metrics_.samples.empty() ? 0 : gsum / static_cast<double>(metrics_.samples.size());
        metrics_.mean_update_latency =
            run_lat_count_ > 0 ? run_lat_sum_ / static_cast<double>(run_lat_count_) : 0;

        ProtocolStats ps;
        ps.last_frt_commit = last_frt_commit_;
        ps.max_attempts_used = max_attempts_used_;
        ps.adoptions = std::move(adoptions_);
        ps.all_converged = true;
        for (const auto& [sw, st] : switches_) {
            const ledger::FrtState& frt = led_.state().flow_tables.at(sw);
            if (st.working.version != frt.version() ||
                flowtable::table_hash(st.working) != frt.current_hash()) {
                ps.all_converged = false;
                continue;
            }
            for (const auto& a : ps.adoptions)
                if (a.switch_id == sw && a.version == frt.version()) {
                    ps.converged_at = std::max(ps.converged_at, a.time);
                    break;
                }
        }

        res.metrics = std::move(metrics_);
        res.ledger = std::move(led_);
        res.protocol = std::move(ps);
        res.trace = std::move(trace_);
        res.decisions = std::move(decisions_);
        res.attack_arrivals = attack_arrivals_;
        res.attack_rejected = attack_rejected_;
        return res;
    }

    const ScenarioConfig& sc_;
    Rng rng_;
    bool with_trace_;
    ledger::Ledger led_;
    Latencies lat_;
    EventQueue q_;
    double t_req_ = 0;

    std::vector<NodeId> controllers_;
    std::vector<NodeId> switch_ids_;
    std::vector<NodeId> responders_;  // controllers + switches, sorted
    std::set<NodeId> crashed_;
    std::vector<UserId> user_ids_;
    std::vector<NodeId> device_ids_;
    std::vector<TaskId> task_ids_;

    std::map<NodeId, SwitchState> switches_;
    std::map<NodeId, std::uint32_t> intended_version_;  // committed + pending
    std::map<std::pair<NodeId, std::uint64_t>, protocol::HashChallenge> challenges_;

    std::uint64_t nonce_counter_ = 0;
    TxId next_tx_id_ = 1;
    std::uint64_t next_entry_id_ = 1'000'000;  // clear of genesis entry ids
    std::uint64_t next_request_id_ = 1;

    MetricsReport metrics_;
    std::uint64_t interval_accepted_ = 0;
    std::uint64_t interval_rejected_ = 0;
    double interval_lat_sum_ = 0;
    std::uint64_t interval_lat_count_ = 0;
    double run_lat_sum_ = 0;
    std::uint64_t run_lat_count_ = 0;
    double last_latency_ = 0;

    SimTime last_frt_commit_ = 0;
    int max_attempts_used_ = 0;
    std::vector<AdoptionEvent> adoptions_;
    std::vector<TraceRow> trace_;
    std::vector<DecisionRow> decisions_;
    std::uint64_t attack_arrivals_ = 0;
    std::uint64_t attack_rejected_ = 0;
};

}  // namespace

RunResult run(const ScenarioConfig& sc, std::uint64_t seed, bool with_trace) {
    if (Decision d = validate_topology(sc.topo); !d)
        throw std::invalid_argument("topology: " + d.reason);
    if (!(sc.end_time > 0)) throw std::invalid_argument("end_time must be positive");
    if (!(sc.sample_interval > 0)) throw std::invalid_argument("sample_interval must be positive");
    Engine e(sc, seed, with_trace);
    return e.run_all();
}

}  // namespace bsdn::netsim
