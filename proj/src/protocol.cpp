#include "bsdn/protocol.hpp"

#include <algorithm>
#include <cmath>

namespace bsdn::protocol {

UpdateRequest make_request(const flowtable::FlowRuleTable& own, std::uint64_t nonce) {
    UpdateRequest req;
    req.requester = own.switch_id;
    req.frt_version = own.version;
    req.frt_hash = flowtable::table_hash(own);
    req.nonce = nonce;
    return req;
}

std::string body_name(const ResponseBody& b) {
    switch (b.index()) {
        case 0: return "latest_frt";
        case 1: return "confirm";
        case 2: return "need_table";
        case 3: return "mismatch";
    }
    return "unknown";
}

std::uint32_t body_version(const ResponseBody& b) {
    if (const auto* l = std::get_if<LatestFRT>(&b)) return l->table.version;
    if (const auto* c = std::get_if<Confirm>(&b)) return c->version;
    if (const auto* m = std::get_if<Mismatch>(&b)) return m->version;
    return 0;
}

Digest body_hash(const ResponseBody& b) {
    if (const auto* l = std::get_if<LatestFRT>(&b)) return flowtable::table_hash(l->table);
    if (const auto* c = std::get_if<Confirm>(&b)) return c->hash;
    if (const auto* m = std::get_if<Mismatch>(&b)) return m->hash;
    return {};
}

Digest ledger_hash(const ledger::WorldState& state, NodeId switch_id, std::uint32_t version) {
    auto it = state.flow_tables.find(switch_id);
    if (it == state.flow_tables.end()) return {};
    const Digest* h = it->second.hash_at(version);
    return h ? *h : Digest{};
}

bool verified_against_ledger(const flowtable::FlowRuleTable& table,
                             const ledger::WorldState& state) {
    Digest recorded = ledger_hash(state, table.switch_id, table.version);
    return !recorded.is_zero() && recorded == flowtable::table_hash(table);
}

ResponsePacket controller_respond(const UpdateRequest& req, const ledger::WorldState& state,
                                  NodeId self) {
    ResponsePacket pkt;
    pkt.responder = self;
    pkt.role = ResponderRole::controller;
    pkt.nonce = req.nonce;

    auto it = state.flow_tables.find(req.requester);
    if (it == state.flow_tables.end()) {
        pkt.body = Mismatch{req.frt_version, req.frt_hash};
        return pkt;
    }
    const ledger::FrtState& frt = it->second;
    if (req.frt_version < frt.version()) {
        pkt.body = LatestFRT{frt.table};  // stale: ship the latest copy
        return pkt;
    }
    const Digest* recorded = frt.hash_at(req.frt_version);
    if (recorded && *recorded == req.frt_hash) {
        pkt.body = Confirm{req.frt_version, req.frt_hash};
    } else {
        pkt.body = LatestFRT{frt.table};  // integrity failure: repair
    }
    return pkt;
}

SwitchRespondOutcome switch_respond(const UpdateRequest& req, const flowtable::FlowRuleTable& own,
                                    const ledger::WorldState& state, NodeId self) {
    SwitchRespondOutcome out;
    if (req.frt_version == own.version) {
        HashChallenge c;
        c.challenger = self;
        c.requester = req.requester;
        c.target_switch = req.requester;
        c.target_version = req.frt_version;
        c.claimed = req.frt_hash;
        c.nonce = req.nonce;
        out.challenge = std::move(c);
        return out;
    }
    if (req.frt_version > own.version) {
        // Requester is ahead: adopt its table, fetching it first if absent.
        if (req.full_table && adopt_offered(own, *req.full_table, state)) {
            ResponsePacket pkt;
            pkt.responder = self;
            pkt.role = ResponderRole::switch_;
            pkt.nonce = req.nonce;
            pkt.body = Confirm{req.frt_version, req.frt_hash};
            out.reply = std::move(pkt);
            return out;
        }
        ResponsePacket pkt;
        pkt.responder = self;
        pkt.role = ResponderRole::switch_;
        pkt.nonce = req.nonce;
        pkt.body = NeedTable{};
        out.reply = std::move(pkt);
        out.wants_table = true;
        return out;
    }
    // Own table is newer: offer it.
    ResponsePacket pkt;
    pkt.responder = self;
    pkt.role = ResponderRole::switch_;
    pkt.nonce = req.nonce;
    pkt.body = LatestFRT{own};
    out.reply = std::move(pkt);
    return out;
}

Digest challenge_reply(const HashChallenge& c, const ledger::WorldState& state) {
    return ledger_hash(state, c.target_switch, c.target_version);
}

bool challenge_confirms(const HashChallenge& c, const ledger::WorldState& state) {
    if (c.responses.size() < c.expected) return false;
    Digest recorded = ledger_hash(state, c.target_switch, c.target_version);
    if (recorded.is_zero() || recorded != c.claimed) return false;
    for (const auto& [_, d] : c.responses)
        if (d != c.claimed) return false;
    return true;
}

ResponsePacket complete_challenge(const HashChallenge& c, NodeId self,
                                  const ledger::WorldState& state) {
    ResponsePacket pkt;
    pkt.responder = self;
    pkt.role = ResponderRole::switch_;
    pkt.nonce = c.nonce;
    if (challenge_confirms(c, state))
        pkt.body = Confirm{c.target_version, c.claimed};
    else
        pkt.body = Mismatch{c.target_version, c.claimed};
    return pkt;
}

std::optional<flowtable::FlowRuleTable> adopt_offered(const flowtable::FlowRuleTable& own,
                                                      const flowtable::FlowRuleTable& offered,
                                                      const ledger::WorldState& state) {
    if (offered.switch_id != own.switch_id) return std::nullopt;
    bool newer = offered.version > own.version;
    bool repair = offered.version == own.version && !verified_against_ledger(own, state);
    if (!newer && !repair) return std::nullopt;
    if (!verified_against_ledger(offered, state)) return std::nullopt;
    return offered;
}

ResolveResult resolve(const flowtable::FlowRuleTable& own,
                      const std::vector<ResponsePacket>& responses,
                      const ledger::WorldState& state) {
    ResolveResult res;
    res.table = own;

    // Controller copies first, highest version wins.
    const flowtable::FlowRuleTable* best = nullptr;
    for (const auto& pkt : responses) {
        if (pkt.role != ResponderRole::controller) continue;
        const auto* l = std::get_if<LatestFRT>(&pkt.body);
        if (!l) continue;
        if (!best || l->table.version > best->version) best = &l->table;
    }
    if (best) {
        if (auto adopted = adopt_offered(own, *best, state)) {
            res.table = std::move(*adopted);
            res.success = true;
            res.changed = true;
            return res;
        }
        if (best->version == own.version && verified_against_ledger(own, state)) {
            res.success = true;  // controller holds what we already hold
            return res;
        }
    }

    // Peer-switch copies next, still gated on the ledger hash.
    best = nullptr;
    for (const auto& pkt : responses) {
        if (pkt.role != ResponderRole::switch_) continue;
        const auto* l = std::get_if<LatestFRT>(&pkt.body);
        if (!l) continue;
        if (!best || l->table.version > best->version) best = &l->table;
    }
    if (best) {
        if (auto adopted = adopt_offered(own, *best, state)) {
            res.table = std::move(*adopted);
            res.success = true;
            res.changed = true;
            return res;
        }
    }

    // A Confirm of the version we hold settles the attempt.
    for (const auto& pkt : responses)
        if (const auto* c = std::get_if<Confirm>(&pkt.body); c && c->version == own.version) {
            res.success = true;
            return res;
        }

    return res;  // no valid response
}

Decision initiate(RequesterSession& s, std::uint64_t nonce, std::size_t expected, SimTime now,
                  SimTime t_req) {
    if (s.requesting) return Decision::reject("already_requesting");
    s.requesting = true;
    s.nonce = nonce;
    s.expected = expected;
    s.deadline = now + t_req;
    s.attempts += 1;
    s.responses.clear();
    return Decision::accept();
}

void finish(RequesterSession& s, bool success) {
    s.requesting = false;
    s.responses.clear();
    if (success) {
        s.failures = 0;
        s.attempts = 0;
    } else {
        s.failures += 1;
    }
}

double backoff_delay(double t_req, int failures) {
    int exp = std::min(failures, 8);
    return t_req * std::pow(2.0, exp);
}

}  // namespace bsdn::protocol
