#pragma once

// ABAC policy records and evaluation: policy creation/update transactions,
// right transfers, and R_ij^k request checks (user i, device j, task k).
// All checks are pure functions over a replayed WorldState.

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "bsdn/bytes.hpp"
#include "bsdn/common.hpp"

namespace bsdn::ledger {
struct WorldState;
}

namespace bsdn::access {

enum class Role : std::uint8_t { operator_ = 0, auditor = 1, admin = 2 };

std::string role_name(Role r);
std::optional<Role> role_from_name(const std::string& s);

struct UserAttributes {
    UserId user_id = 0;
    Role role = Role::operator_;
    std::string org;
    std::uint32_t clearance = 0;
};

// Conjunction member: equality on role/org or a clearance floor.
struct AttrConstraint {
    enum class Kind : std::uint8_t { role_eq = 0, org_eq = 1, clearance_min = 2 };
    Kind kind = Kind::role_eq;
    Role role = Role::operator_;
    std::string org;
    std::uint32_t clearance = 0;

    bool satisfied_by(const UserAttributes& u) const;
};

struct AccessPolicy {
    PolicyId policy_id = 0;
    UserId owner = 0;
    NodeId device_id = 0;
    std::vector<AttrConstraint> required_attrs;
    std::set<TaskId> allowed_tasks;  // non-empty while active
    bool active = true;
};

struct AccessRequest {
    UserId user = 0;
    NodeId device = 0;
    TaskId task = 0;
    SimTime sim_time = 0;
};

struct RightTransferPayload {
    PolicyId policy_id = 0;
    UserId from = 0;  // current holder
    UserId to = 0;
};

// Records an allow decision on the ledger; valid only if the evaluation at
// the containing block's state really allows with the named policy.
struct AccessGrantPayload {
    AccessRequest request;
    PolicyId policy_id = 0;
};

enum class PolicyOpKind { create, update };

// PCT: policy_id fresh and issuer = owner. Update: issuer = owner of the
// existing policy; owner itself never changes.
Decision check_policy_op(const AccessPolicy& payload, PolicyOpKind op, NodeId issuer,
                         const ledger::WorldState& state);

// Transfer moves the right: payload.from must be the current holder and the
// issuer must be that holder.
Decision check_transfer(const RightTransferPayload& payload, NodeId issuer,
                        const ledger::WorldState& state);

Decision check_grant(const AccessGrantPayload& payload, const ledger::WorldState& state);

struct EvalResult {
    bool allowed = false;
    PolicyId policy_id = 0;       // set when allowed
    std::string deny_reason;      // unknown_user | unknown_device | task_not_allowed | no_policy

    Decision to_decision() const {
        return allowed ? Decision::accept() : Decision::reject(deny_reason);
    }
};

// Deny-by-default. Allow iff the user is registered and some active policy
// for the device is currently held by the user, its attribute constraints
// are satisfied, and the task is allowed; the lowest satisfying policy_id
// is reported.
EvalResult evaluate_request(const AccessRequest& req, const ledger::WorldState& state);

// Owner if no transfer was applied, else the last transferee.
std::optional<UserId> resolve_right_holder(PolicyId policy_id, const ledger::WorldState& state);

void encode_user(ByteWriter& w, const UserAttributes& u);
UserAttributes decode_user(ByteReader& r);
void encode_policy(ByteWriter& w, const AccessPolicy& p);
AccessPolicy decode_policy(ByteReader& r);
void encode_request(ByteWriter& w, const AccessRequest& rq);
AccessRequest decode_request(ByteReader& r);
void encode_transfer(ByteWriter& w, const RightTransferPayload& t);
RightTransferPayload decode_transfer(ByteReader& r);
void encode_grant(ByteWriter& w, const AccessGrantPayload& g);
AccessGrantPayload decode_grant(ByteReader& r);

}  // namespace bsdn::access
