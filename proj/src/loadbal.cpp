#include "bsdn/loadbal.hpp"

#include "bsdn/ledger.hpp"

namespace bsdn::loadbal {

Decision check_admission(const access::AccessRequest& req, const ledger::WorldState& state) {
    auto tit = state.tasks.find(req.task);
    if (tit == state.tasks.end()) return Decision::reject("unknown_task");
    auto dit = state.loads.find(req.device);
    if (dit == state.loads.end()) return Decision::reject("unknown_device");
    if (dit->second.current + tit->second.cost > dit->second.capacity)
        return Decision::reject("over_capacity");
    return Decision::accept();
}

Decision check_admit_tx(const LoadAdmitPayload& payload, const ledger::WorldState& state) {
    access::EvalResult ev = access::evaluate_request(payload.request, state);
    if (!ev.allowed) return Decision::reject(ev.deny_reason);
    if (state.used_request_ids.count(payload.request_id)) return Decision::reject("duplicate_request");
    return check_admission(payload.request, state);
}

Decision check_release_tx(const LoadReleasePayload& payload, const ledger::WorldState& state) {
    auto dit = state.loads.find(payload.device);
    if (dit == state.loads.end()) return Decision::reject("unknown_device");
    if (!dit->second.active_tasks.count(payload.request_id)) return Decision::reject("unknown_admit");
    return Decision::accept();
}

void apply_admit(ledger::WorldState& state, const LoadAdmitPayload& payload, SimTime now) {
    const TaskKind& task = state.tasks.at(payload.request.task);
    DeviceLoad& dev = state.loads.at(payload.request.device);
    dev.active_tasks[payload.request_id] =
        DeviceLoad::ActiveTask{payload.request_id, task.cost, now + task.duration};
    dev.current += task.cost;
    state.used_request_ids.insert(payload.request_id);
}

Decision apply_release(ledger::WorldState& state, const LoadReleasePayload& payload) {
    auto dit = state.loads.find(payload.device);
    if (dit == state.loads.end()) return Decision::reject("unknown_device");
    auto tit = dit->second.active_tasks.find(payload.request_id);
    if (tit == dit->second.active_tasks.end()) return Decision::reject("unknown_admit");
    dit->second.current -= tit->second.cost;
    dit->second.active_tasks.erase(tit);
    return Decision::accept();
}

GuardReport guard_audit(const std::vector<ledger::Block>& chain,
                        const std::vector<ledger::DroppedTx>& dropped) {
    GuardReport rep;
    for (const auto& d : dropped)
        if (d.kind == ledger::TxKind::LoadAdmit) ++rep.rejected_admits;
    if (chain.empty() || !chain[0].genesis) return rep;

    ledger::WorldState state = ledger::init_state(*chain[0].genesis);
    for (const auto& [dev, l] : state.loads) rep.peak_load[dev] = l.current;
    for (std::size_t i = 1; i < chain.size(); ++i) {
        for (const auto& tx : chain[i].transactions) {
            if (!ledger::validate_transaction(tx, state)) return rep;  // corrupt chain: stop
            ledger::apply_transaction(state, tx);
            for (const auto& [dev, l] : state.loads) {
                auto& peak = rep.peak_load[dev];
                if (l.current > peak) peak = l.current;
                if (l.current > l.capacity && tx.kind == ledger::TxKind::LoadAdmit)
                    ++rep.committed_violations;
            }
        }
    }
    return rep;
}

// ---- encodings ----

void encode_task(ByteWriter& w, const TaskKind& t) {
    w.u64(t.id);
    w.i64(t.cost);
    w.f64(t.duration);
}

TaskKind decode_task(ByteReader& r) {
    TaskKind t;
    t.id = r.u64();
    t.cost = r.i64();
    t.duration = r.f64();
    return t;
}

void encode_admit(ByteWriter& w, const LoadAdmitPayload& p) {
    w.u64(p.request_id);
    access::encode_request(w, p.request);
}

LoadAdmitPayload decode_admit(ByteReader& r) {
    LoadAdmitPayload p;
    p.request_id = r.u64();
    p.request = access::decode_request(r);
    return p;
}

void encode_release(ByteWriter& w, const LoadReleasePayload& p) {
    w.u64(p.request_id);
    w.u64(p.device);
}

LoadReleasePayload decode_release(ByteReader& r) {
    LoadReleasePayload p;
    p.request_id = r.u64();
    p.device = r.u64();
    return p;
}

}  // namespace bsdn::loadbal
