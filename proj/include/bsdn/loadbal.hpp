#pragma once

// Per-device load accounting and quorum-checked admission. Load is an
// abstract additive cost per task kind; a committed LoadAdmit raises the
// device load until the matching LoadRelease (auto-issued by the simulator
// at task end).

#include <cstdint>
#include <map>
#include <vector>

#include "bsdn/access.hpp"
#include "bsdn/bytes.hpp"
#include "bsdn/common.hpp"

namespace bsdn::ledger {
struct WorldState;
struct Block;
struct DroppedTx;
}

namespace bsdn::loadbal {

struct TaskKind {
    TaskId id = 0;
    LoadUnits cost = 1;   // c_k
    SimTime duration = 1; // d_k, seconds until auto-release
};

struct DeviceLoad {
    struct ActiveTask {
        std::uint64_t request_id = 0;
        LoadUnits cost = 0;
        SimTime end_time = 0;
    };

    NodeId device_id = 0;
    LoadUnits capacity = 0;  // C_j
    LoadUnits current = 0;   // invariant: sum of active task costs
    std::map<std::uint64_t, ActiveTask> active_tasks;
};

struct LoadAdmitPayload {
    std::uint64_t request_id = 0;
    access::AccessRequest request;
};

struct LoadReleasePayload {
    std::uint64_t request_id = 0;
    NodeId device = 0;
};

// Accept iff current + cost(task) <= capacity. Assumes the request already
// passed evaluate_request.
Decision check_admission(const access::AccessRequest& req, const ledger::WorldState& state);

// Full transaction-level check: access allowed, request id fresh, capacity.
Decision check_admit_tx(const LoadAdmitPayload& payload, const ledger::WorldState& state);
Decision check_release_tx(const LoadReleasePayload& payload, const ledger::WorldState& state);

void apply_admit(ledger::WorldState& state, const LoadAdmitPayload& payload, SimTime now);
Decision apply_release(ledger::WorldState& state, const LoadReleasePayload& payload);

// Post-run audit: replays the chain and reports whether any committed state
// ever exceeded a device capacity, the per-device peak, and how many
// submitted admits the quorum rejected.
struct GuardReport {
    std::uint64_t committed_violations = 0;
    std::uint64_t rejected_admits = 0;
    std::map<NodeId, LoadUnits> peak_load;
};

GuardReport guard_audit(const std::vector<ledger::Block>& chain,
                        const std::vector<ledger::DroppedTx>& dropped);

void encode_task(ByteWriter& w, const TaskKind& t);
TaskKind decode_task(ByteReader& r);
void encode_admit(ByteWriter& w, const LoadAdmitPayload& p);
LoadAdmitPayload decode_admit(ByteReader& r);
void encode_release(ByteWriter& w, const LoadReleasePayload& p);
LoadReleasePayload decode_release(ByteReader& r);

}  // namespace bsdn::loadbal
