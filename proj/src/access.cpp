#include "bsdn/access.hpp"

#include "bsdn/ledger.hpp"

namespace bsdn::access {

std::string role_name(Role r) {
    switch (r) {
        case Role::operator_: return "operator";
        case Role::auditor: return "auditor";
        case Role::admin: return "admin";
    }
    return "unknown";
}

std::optional<Role> role_from_name(const std::string& s) {
    if (s == "operator") return Role::operator_;
    if (s == "auditor") return Role::auditor;
    if (s == "admin") return Role::admin;
    return std::nullopt;
}

bool AttrConstraint::satisfied_by(const UserAttributes& u) const {
    switch (kind) {
        case Kind::role_eq: return u.role == role;
        case Kind::org_eq: return u.org == org;
        case Kind::clearance_min: return u.clearance >= clearance;
    }
    return false;
}

// Shared field checks for create and update.
static Decision policy_shape_ok(const AccessPolicy& p, const ledger::WorldState& state) {
    if (!state.users.count(p.owner)) return Decision::reject("unknown_owner");
    if (!state.loads.count(p.device_id)) return Decision::reject("unknown_device");
    if (p.allowed_tasks.empty()) return Decision::reject("empty_tasks");
    for (auto t : p.allowed_tasks)
        if (!state.tasks.count(t)) return Decision::reject("unknown_task");
    return Decision::accept();
}

Decision check_policy_op(const AccessPolicy& payload, PolicyOpKind op, NodeId issuer,
                         const ledger::WorldState& state) {
    if (Decision d = policy_shape_ok(payload, state); !d) return d;
    if (op == PolicyOpKind::create) {
        if (state.policies.count(payload.policy_id)) return Decision::reject("duplicate_policy");
        if (issuer != payload.owner) return Decision::reject("not_owner");
        return Decision::accept();
    }
    auto it = state.policies.find(payload.policy_id);
    if (it == state.policies.end()) return Decision::reject("unknown_policy");
    if (issuer != it->second.owner) return Decision::reject("not_owner");
    if (payload.owner != it->second.owner) return Decision::reject("owner_change");
    return Decision::accept();
}

Decision check_transfer(const RightTransferPayload& payload, NodeId issuer,
                        const ledger::WorldState& state) {
    auto it = state.policies.find(payload.policy_id);
    if (it == state.policies.end()) return Decision::reject("unknown_policy");
    if (!it->second.active) return Decision::reject("inactive_policy");
    if (!state.users.count(payload.to)) return Decision::reject("unknown_user");
    if (payload.to == payload.from) return Decision::reject("self_transfer");
    auto holder = resolve_right_holder(payload.policy_id, state);
    if (!holder || *holder != payload.from || issuer != payload.from)
        return Decision::reject("not_right_holder");
    return Decision::accept();
}

Decision check_grant(const AccessGrantPayload& payload, const ledger::WorldState& state) {
    EvalResult r = evaluate_request(payload.request, state);
    if (!r.allowed) return Decision::reject(r.deny_reason);
    if (r.policy_id != payload.policy_id) return Decision::reject("grant_mismatch");
    return Decision::accept();
}

EvalResult evaluate_request(const AccessRequest& req, const ledger::WorldState& state) {
    auto uit = state.users.find(req.user);
    if (uit == state.users.end()) return {false, 0, "unknown_user"};
    if (!state.loads.count(req.device)) return {false, 0, "unknown_device"};

    // Deny by default; walk policies in ascending id order so the first
    // full match is the lowest one.
    bool matched_but_wrong_task = false;
    for (const auto& [pid, pol] : state.policies) {
        if (!pol.active || pol.device_id != req.device) continue;
        auto holder = resolve_right_holder(pid, state);
        if (!holder || *holder != req.user) continue;
        bool attrs_ok = true;
        for (const auto& c : pol.required_attrs)
            if (!c.satisfied_by(uit->second)) {
                attrs_ok = false;
                break;
            }
        if (!attrs_ok) continue;
        if (pol.allowed_tasks.count(req.task)) return {true, pid, {}};
        matched_but_wrong_task = true;
    }
    return {false, 0, matched_but_wrong_task ? "task_not_allowed" : "no_policy"};
}

std::optional<UserId> resolve_right_holder(PolicyId policy_id, const ledger::WorldState& state) {
    auto it = state.right_holders.find(policy_id);
    if (it == state.right_holders.end()) return std::nullopt;
    return it->second;
}

// ---- encodings ----

void encode_user(ByteWriter& w, const UserAttributes& u) {
    w.u64(u.user_id);
    w.u8(static_cast<std::uint8_t>(u.role));
    w.str(u.org);
    w.u32(u.clearance);
}

UserAttributes decode_user(ByteReader& r) {
    UserAttributes u;
    u.user_id = r.u64();
    std::uint8_t role = r.u8();
    if (role > static_cast<std::uint8_t>(Role::admin)) throw DecodeError("bad role");
    u.role = static_cast<Role>(role);
    u.org = r.str();
    u.clearance = r.u32();
    return u;
}

static void encode_constraint(ByteWriter& w, const AttrConstraint& c) {
    w.u8(static_cast<std::uint8_t>(c.kind));
    w.u8(static_cast<std::uint8_t>(c.role));
    w.str(c.org);
    w.u32(c.clearance);
}

static AttrConstraint decode_constraint(ByteReader& r) {
    AttrConstraint c;
    std::uint8_t kind = r.u8();
    if (kind > static_cast<std::uint8_t>(AttrConstraint::Kind::clearance_min))
        throw DecodeError("bad constraint kind");
    c.kind = static_cast<AttrConstraint::Kind>(kind);
    std::uint8_t role = r.u8();
    if (role > static_cast<std::uint8_t>(Role::admin)) throw DecodeError("bad role");
    c.role = static_cast<Role>(role);
    c.org = r.str();
    c.clearance = r.u32();
    return c;
}

void encode_policy(ByteWriter& w, const AccessPolicy& p) {
    w.u64(p.policy_id);
    w.u64(p.owner);
    w.u64(p.device_id);
    w.u32(static_cast<std::uint32_t>(p.required_attrs.size()));
    for (const auto& c : p.required_attrs) encode_constraint(w, c);
    w.u32(static_cast<std::uint32_t>(p.allowed_tasks.size()));
    for (auto t : p.allowed_tasks) w.u64(t);
    w.u8(p.active ? 1 : 0);
}

AccessPolicy decode_policy(ByteReader& r) {
    AccessPolicy p;
    p.policy_id = r.u64();
    p.owner = r.u64();
    p.device_id = r.u64();
    for (std::uint32_t i = 0, n = r.u32(); i < n; ++i)
        p.required_attrs.push_back(decode_constraint(r));
    for (std::uint32_t i = 0, n = r.u32(); i < n; ++i) p.allowed_tasks.insert(r.u64());
    p.active = r.flag();
    return p;
}

void encode_request(ByteWriter& w, const AccessRequest& rq) {
    w.u64(rq.user);
    w.u64(rq.device);
    w.u64(rq.task);
    w.f64(rq.sim_time);
}

AccessRequest decode_request(ByteReader& r) {
    AccessRequest rq;
    rq.user = r.u64();
    rq.device = r.u64();
    rq.task = r.u64();
    rq.sim_time = r.f64();
    return rq;
}

void encode_transfer(ByteWriter& w, const RightTransferPayload& t) {
    w.u64(t.policy_id);
    w.u64(t.from);
    w.u64(t.to);
}

RightTransferPayload decode_transfer(ByteReader& r) {
    RightTransferPayload t;
    t.policy_id = r.u64();
    t.from = r.u64();
    t.to = r.u64();
    return t;
}

void encode_grant(ByteWriter& w, const AccessGrantPayload& g) {
    encode_request(w, g.request);
    w.u64(g.policy_id);
}

AccessGrantPayload decode_grant(ByteReader& r) {
    AccessGrantPayload g;
    g.request = decode_request(r);
    g.policy_id = r.u64();
    return g;
}

}  // namespace bsdn::access
