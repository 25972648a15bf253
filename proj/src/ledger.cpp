#include "bsdn/ledger.hpp"

#include <algorithm>
#include <stdexcept>

namespace bsdn::ledger {

std::string tx_kind_name(TxKind k) {
    switch (k) {
        case TxKind::FlowRuleUpdate: return "flow_rule_update";
        case TxKind::PolicyCreation: return "policy_creation";
        case TxKind::PolicyUpdate: return "policy_update";
        case TxKind::RightTransfer: return "right_transfer";
        case TxKind::AccessGrant: return "access_grant";
        case TxKind::LoadAdmit: return "load_admit";
        case TxKind::LoadRelease: return "load_release";
    }
    return "unknown";
}

bool kind_matches_payload(const Transaction& tx) {
    switch (tx.kind) {
        case TxKind::FlowRuleUpdate: return tx.payload.index() == 0;
        case TxKind::PolicyCreation:
        case TxKind::PolicyUpdate: return tx.payload.index() == 1;
        case TxKind::RightTransfer: return tx.payload.index() == 2;
        case TxKind::AccessGrant: return tx.payload.index() == 3;
        case TxKind::LoadAdmit: return tx.payload.index() == 4;
        case TxKind::LoadRelease: return tx.payload.index() == 5;
    }
    return false;
}

// ---- genesis ----

void encode_genesis(ByteWriter& w, const GenesisRecord& g) {
    w.u32(static_cast<std::uint32_t>(g.controllers.size()));
    for (auto id : g.controllers) w.u64(id);
    w.u32(static_cast<std::uint32_t>(g.switches.size()));
    for (auto id : g.switches) w.u64(id);
    w.u32(static_cast<std::uint32_t>(g.hosts.size()));
    for (const auto& h : g.hosts) {
        w.u64(h.id);
        w.u64(h.server);
        w.i64(h.capacity);
    }
    w.u32(static_cast<std::uint32_t>(g.users.size()));
    for (const auto& u : g.users) access::encode_user(w, u);
    w.u32(static_cast<std::uint32_t>(g.tasks.size()));
    for (const auto& t : g.tasks) loadbal::encode_task(w, t);
    w.u32(static_cast<std::uint32_t>(g.policies.size()));
    for (const auto& p : g.policies) access::encode_policy(w, p);
    w.u32(static_cast<std::uint32_t>(g.initial_tables.size()));
    for (const auto& [sw, entries] : g.initial_tables) {
        w.u64(sw);
        w.u32(static_cast<std::uint32_t>(entries.size()));
        for (const auto& e : entries) flowtable::encode_entry(w, e);
    }
}

GenesisRecord decode_genesis(ByteReader& r) {
    GenesisRecord g;
    for (std::uint32_t i = 0, n = r.u32(); i < n; ++i) g.controllers.push_back(r.u64());
    for (std::uint32_t i = 0, n = r.u32(); i < n; ++i) g.switches.push_back(r.u64());
    for (std::uint32_t i = 0, n = r.u32(); i < n; ++i) {
        GenesisRecord::Host h;
        h.id = r.u64();
        h.server = r.u64();
        h.capacity = r.i64();
        g.hosts.push_back(h);
    }
    for (std::uint32_t i = 0, n = r.u32(); i < n; ++i) g.users.push_back(access::decode_user(r));
    for (std::uint32_t i = 0, n = r.u32(); i < n; ++i) g.tasks.push_back(loadbal::decode_task(r));
    for (std::uint32_t i = 0, n = r.u32(); i < n; ++i) g.policies.push_back(access::decode_policy(r));
    for (std::uint32_t i = 0, n = r.u32(); i < n; ++i) {
        NodeId sw = r.u64();
        auto& entries = g.initial_tables[sw];
        for (std::uint32_t j = 0, m = r.u32(); j < m; ++j) entries.push_back(flowtable::decode_entry(r));
    }
    return g;
}

// Semantic sanity of a genesis record: one flat id space, references resolve.
static Decision genesis_ok(const GenesisRecord& g) {
    if (g.controllers.empty()) return Decision::reject("bad_genesis:no_controllers");
    std::set<NodeId> ids;
    auto fresh = [&ids](NodeId id) { return ids.insert(id).second; };
    for (auto id : g.controllers)
        if (!fresh(id)) return Decision::reject("bad_genesis:duplicate_id");
    for (auto id : g.switches)
        if (!fresh(id)) return Decision::reject("bad_genesis:duplicate_id");
    std::set<NodeId> switches(g.switches.begin(), g.switches.end());
    for (const auto& h : g.hosts) {
        if (!fresh(h.id)) return Decision::reject("bad_genesis:duplicate_id");
        if (!switches.count(h.server)) return Decision::reject("bad_genesis:host_server_not_switch");
        if (h.capacity < 0) return Decision::reject("bad_genesis:negative_capacity");
    }
    std::set<NodeId> hosts;
    for (const auto& h : g.hosts) hosts.insert(h.id);
    std::set<UserId> users;
    for (const auto& u : g.users) {
        if (!fresh(u.user_id)) return Decision::reject("bad_genesis:duplicate_id");
        users.insert(u.user_id);
    }
    std::set<TaskId> tasks;
    for (const auto& t : g.tasks) {
        if (!tasks.insert(t.id).second) return Decision::reject("bad_genesis:duplicate_task");
        if (t.cost < 1) return Decision::reject("bad_genesis:nonpositive_cost");
        if (!(t.duration > 0)) return Decision::reject("bad_genesis:nonpositive_duration");
    }
    std::set<PolicyId> pids;
    for (const auto& p : g.policies) {
        if (!pids.insert(p.policy_id).second) return Decision::reject("bad_genesis:duplicate_policy");
        if (!users.count(p.owner)) return Decision::reject("bad_genesis:policy_owner_unknown");
        if (!hosts.count(p.device_id)) return Decision::reject("bad_genesis:policy_device_unknown");
        if (p.allowed_tasks.empty()) return Decision::reject("bad_genesis:policy_empty_tasks");
        for (auto t : p.allowed_tasks)
            if (!tasks.count(t)) return Decision::reject("bad_genesis:policy_task_unknown");
    }
    for (const auto& [sw, entries] : g.initial_tables) {
        if (!switches.count(sw)) return Decision::reject("bad_genesis:table_for_non_switch");
        std::set<std::uint64_t> eids;
        for (const auto& e : entries)
            if (!eids.insert(e.entry_id).second) return Decision::reject("bad_genesis:duplicate_entry_id");
    }
    return Decision::accept();
}

// ---- transactions and blocks ----

void encode_tx(ByteWriter& w, const Transaction& tx) {
    w.u64(tx.id);
    w.u8(static_cast<std::uint8_t>(tx.kind));
    w.u64(tx.issuer);
    w.f64(tx.sim_time);
    ByteWriter pw;
    switch (tx.kind) {
        case TxKind::FlowRuleUpdate:
            flowtable::encode_update(pw, std::get<flowtable::FlowRuleUpdatePayload>(tx.payload));
            break;
        case TxKind::PolicyCreation:
        case TxKind::PolicyUpdate:
            access::encode_policy(pw, std::get<access::AccessPolicy>(tx.payload));
            break;
        case TxKind::RightTransfer:
            access::encode_transfer(pw, std::get<access::RightTransferPayload>(tx.payload));
            break;
        case TxKind::AccessGrant:
            access::encode_grant(pw, std::get<access::AccessGrantPayload>(tx.payload));
            break;
        case TxKind::LoadAdmit:
            loadbal::encode_admit(pw, std::get<loadbal::LoadAdmitPayload>(tx.payload));
            break;
        case TxKind::LoadRelease:
            loadbal::encode_release(pw, std::get<loadbal::LoadReleasePayload>(tx.payload));
            break;
    }
    w.blob(pw.data());
}

Transaction decode_tx(ByteReader& r) {
    Transaction tx;
    tx.id = r.u64();
    std::uint8_t kind = r.u8();
    if (kind > static_cast<std::uint8_t>(TxKind::LoadRelease)) throw DecodeError("bad tx kind");
    tx.kind = static_cast<TxKind>(kind);
    tx.issuer = r.u64();
    tx.sim_time = r.f64();
    Bytes payload = r.blob();
    ByteReader pr(payload);
    switch (tx.kind) {
        case TxKind::FlowRuleUpdate: tx.payload = flowtable::decode_update(pr); break;
        case TxKind::PolicyCreation:
        case TxKind::PolicyUpdate: tx.payload = access::decode_policy(pr); break;
        case TxKind::RightTransfer: tx.payload = access::decode_transfer(pr); break;
        case TxKind::AccessGrant: tx.payload = access::decode_grant(pr); break;
        case TxKind::LoadAdmit: tx.payload = loadbal::decode_admit(pr); break;
        case TxKind::LoadRelease: tx.payload = loadbal::decode_release(pr); break;
    }
    if (!pr.done()) throw DecodeError("trailing bytes in tx payload");
    return tx;
}

Bytes identity_encoding(const Block& b) {
    ByteWriter w;
    w.u64(b.index);
    w.raw(b.prev_hash.bytes.data(), b.prev_hash.bytes.size());
    w.f64(b.timestamp);
    w.u64(b.proposer);
    if (b.genesis) {
        w.u8(1);
        ByteWriter gw;
        encode_genesis(gw, *b.genesis);
        w.blob(gw.data());
    } else {
        w.u8(0);
    }
    w.u32(static_cast<std::uint32_t>(b.transactions.size()));
    for (const auto& tx : b.transactions) encode_tx(w, tx);
    return w.take();
}

Digest hash_block(const Block& b) { return sha256(identity_encoding(b)); }

Digest record_hash(const Block& b) {
    ByteWriter w;
    encode_block(w, b);
    return sha256(w.data());
}

void encode_block(ByteWriter& w, const Block& b) {
    Bytes id = identity_encoding(b);
    w.raw(id.data(), id.size());
    w.u32(static_cast<std::uint32_t>(b.votes.size()));
    for (auto v : b.votes) w.u64(v);  // std::set iterates ascending
}

Block decode_block(ByteReader& r) {
    Block b;
    b.index = r.u64();
    r.raw(b.prev_hash.bytes.data(), b.prev_hash.bytes.size());
    b.timestamp = r.f64();
    b.proposer = r.u64();
    if (r.flag()) {
        Bytes gb = r.blob();
        ByteReader gr(gb);
        b.genesis = decode_genesis(gr);
        if (!gr.done()) throw DecodeError("trailing bytes in genesis record");
    }
    for (std::uint32_t i = 0, n = r.u32(); i < n; ++i) b.transactions.push_back(decode_tx(r));
    std::uint64_t prev_vote = 0;
    bool first = true;
    for (std::uint32_t i = 0, n = r.u32(); i < n; ++i) {
        std::uint64_t v = r.u64();
        if (!first && v <= prev_vote) throw DecodeError("votes not strictly ascending");
        b.votes.insert(v);
        prev_vote = v;
        first = false;
    }
    return b;
}

// ---- world state ----

Bytes WorldState::canonical_encoding() const {
    ByteWriter w;
    w.u32(static_cast<std::uint32_t>(principals.size()));
    for (auto id : principals) w.u64(id);
    w.u32(static_cast<std::uint32_t>(controllers.size()));
    for (auto id : controllers) w.u64(id);
    w.u32(static_cast<std::uint32_t>(users.size()));
    for (const auto& [id, u] : users) access::encode_user(w, u);
    w.u32(static_cast<std::uint32_t>(tasks.size()));
    for (const auto& [id, t] : tasks) loadbal::encode_task(w, t);
    w.u32(static_cast<std::uint32_t>(flow_tables.size()));
    for (const auto& [sw, frt] : flow_tables) {
        w.u64(sw);
        w.blob(flowtable::canonical_encoding(frt.table));
        w.u32(static_cast<std::uint32_t>(frt.hash_history.size()));
        for (const auto& h : frt.hash_history) w.raw(h.bytes.data(), h.bytes.size());
    }
    w.u32(static_cast<std::uint32_t>(policies.size()));
    for (const auto& [id, p] : policies) access::encode_policy(w, p);
    w.u32(static_cast<std::uint32_t>(right_holders.size()));
    for (const auto& [pid, uid] : right_holders) {
        w.u64(pid);
        w.u64(uid);
    }
    w.u32(static_cast<std::uint32_t>(loads.size()));
    for (const auto& [dev, l] : loads) {
        w.u64(dev);
        w.i64(l.capacity);
        w.i64(l.current);
        w.u32(static_cast<std::uint32_t>(l.active_tasks.size()));
        for (const auto& [rid, t] : l.active_tasks) {
            w.u64(rid);
            w.i64(t.cost);
            w.f64(t.end_time);
        }
    }
    w.u32(static_cast<std::uint32_t>(used_request_ids.size()));
    for (auto id : used_request_ids) w.u64(id);
    return w.take();
}

Digest WorldState::digest() const { return sha256(canonical_encoding()); }

WorldState init_state(const GenesisRecord& g) {
    WorldState s;
    for (auto id : g.controllers) {
        s.principals.insert(id);
        s.controllers.insert(id);
    }
    for (auto id : g.switches) s.principals.insert(id);
    for (const auto& h : g.hosts) {
        s.principals.insert(h.id);
        loadbal::DeviceLoad l;
        l.device_id = h.id;
        l.capacity = h.capacity;
        s.loads[h.id] = std::move(l);
    }
    for (const auto& u : g.users) {
        s.principals.insert(u.user_id);
        s.users[u.user_id] = u;
    }
    for (const auto& t : g.tasks) s.tasks[t.id] = t;
    for (auto sw : g.switches) {
        FrtState frt;
        frt.table.switch_id = sw;
        frt.table.version = 1;
        if (auto it = g.initial_tables.find(sw); it != g.initial_tables.end())
            frt.table.entries = it->second;
        frt.hash_history.push_back(flowtable::table_hash(frt.table));
        s.flow_tables[sw] = std::move(frt);
    }
    for (const auto& p : g.policies) {
        s.policies[p.policy_id] = p;
        s.right_holders[p.policy_id] = p.owner;
    }
    return s;
}

Decision validate_transaction(const Transaction& tx, const WorldState& state) {
    if (!state.principals.count(tx.issuer)) return Decision::reject("unknown_issuer");
    if (!kind_matches_payload(tx)) return Decision::reject("payload_kind_mismatch");
    switch (tx.kind) {
        case TxKind::FlowRuleUpdate: {
            const auto& p = std::get<flowtable::FlowRuleUpdatePayload>(tx.payload);
            auto it = state.flow_tables.find(p.switch_id);
            if (it == state.flow_tables.end()) return Decision::reject("unknown_switch");
            return flowtable::check_update(p, it->second.table);
        }
        case TxKind::PolicyCreation:
            return access::check_policy_op(std::get<access::AccessPolicy>(tx.payload),
                                           access::PolicyOpKind::create, tx.issuer, state);
        case TxKind::PolicyUpdate:
            return access::check_policy_op(std::get<access::AccessPolicy>(tx.payload),
                                           access::PolicyOpKind::update, tx.issuer, state);
        case TxKind::RightTransfer:
            return access::check_transfer(std::get<access::RightTransferPayload>(tx.payload),
                                          tx.issuer, state);
        case TxKind::AccessGrant:
            return access::check_grant(std::get<access::AccessGrantPayload>(tx.payload), state);
        case TxKind::LoadAdmit:
            return loadbal::check_admit_tx(std::get<loadbal::LoadAdmitPayload>(tx.payload), state);
        case TxKind::LoadRelease:
            return loadbal::check_release_tx(std::get<loadbal::LoadReleasePayload>(tx.payload), state);
    }
    return Decision::reject("unknown_kind");
}

void apply_transaction(WorldState& state, const Transaction& tx) {
    switch (tx.kind) {
        case TxKind::FlowRuleUpdate: {
            const auto& p = std::get<flowtable::FlowRuleUpdatePayload>(tx.payload);
            auto& frt = state.flow_tables.at(p.switch_id);
            frt.table = flowtable::apply_update(frt.table, p);
            frt.hash_history.push_back(flowtable::table_hash(frt.table));
            break;
        }
        case TxKind::PolicyCreation: {
            const auto& p = std::get<access::AccessPolicy>(tx.payload);
            state.policies[p.policy_id] = p;
            state.right_holders[p.policy_id] = p.owner;
            break;
        }
        case TxKind::PolicyUpdate: {
            // Owner is immutable and the transferred right survives the update.
            const auto& p = std::get<access::AccessPolicy>(tx.payload);
            state.policies[p.policy_id] = p;
            break;
        }
        case TxKind::RightTransfer: {
            const auto& p = std::get<access::RightTransferPayload>(tx.payload);
            state.right_holders[p.policy_id] = p.to;
            break;
        }
        case TxKind::AccessGrant:
            break;  // audit record only
        case TxKind::LoadAdmit:
            loadbal::apply_admit(state, std::get<loadbal::LoadAdmitPayload>(tx.payload), tx.sim_time);
            break;
        case TxKind::LoadRelease: {
            Decision d = loadbal::apply_release(state, std::get<loadbal::LoadReleasePayload>(tx.payload));
            if (!d) throw std::logic_error("release applied without validation: " + d.reason);
            break;
        }
    }
}

// Validates and applies a block's transactions in order against a copy of
// `base`; used by seal re-checks, append and replay.
static Decision run_block_txs(WorldState& scratch, const std::vector<Transaction>& txs) {
    for (const auto& tx : txs) {
        Decision d = validate_transaction(tx, scratch);
        if (!d) return Decision::reject("invalid_tx:" + std::to_string(tx.id) + ":" + d.reason);
        apply_transaction(scratch, tx);
    }
    return Decision::accept();
}

static Decision genesis_block_ok(const Block& b) {
    if (b.index != 0) return Decision::reject("bad_genesis:index");
    if (!b.prev_hash.is_zero()) return Decision::reject("bad_genesis:prev_hash");
    if (!b.genesis) return Decision::reject("bad_genesis:missing_record");
    if (!b.transactions.empty()) return Decision::reject("bad_genesis:has_transactions");
    return genesis_ok(*b.genesis);
}

std::optional<WorldState> replay(const std::vector<Block>& chain) {
    if (chain.empty()) return std::nullopt;
    if (!genesis_block_ok(chain[0])) return std::nullopt;
    WorldState state = init_state(*chain[0].genesis);
    for (std::size_t i = 1; i < chain.size(); ++i) {
        const Block& b = chain[i];
        if (b.index != i || b.genesis || b.transactions.empty()) return std::nullopt;
        if (b.prev_hash != record_hash(chain[i - 1])) return std::nullopt;
        if (!run_block_txs(state, b.transactions)) return std::nullopt;
    }
    return state;
}

static NodeId proposer_for(const std::set<NodeId>& controllers, std::uint64_t index) {
    auto it = controllers.begin();
    std::advance(it, static_cast<long>(index % controllers.size()));
    return *it;
}

Decision verify_chain_blocks(const std::vector<Block>& chain, const Digest& tip) {
    if (chain.empty()) return Decision::reject("break_at:0:empty_chain");
    auto fail = [](std::size_t i, const std::string& cause) {
        return Decision::reject("break_at:" + std::to_string(i) + ":" + cause);
    };
    if (Decision d = genesis_block_ok(chain[0]); !d) return fail(0, d.reason);
    WorldState state = init_state(*chain[0].genesis);
    std::size_t quorum = state.controllers.size() / 2 + 1;
    for (std::size_t i = 1; i < chain.size(); ++i) {
        const Block& b = chain[i];
        if (b.index != i) return fail(i, "bad_index");
        if (b.genesis) return fail(i, "unexpected_genesis");
        if (b.prev_hash != record_hash(chain[i - 1])) return fail(i, "prev_hash_mismatch");
        if (b.timestamp < chain[i - 1].timestamp) return fail(i, "timestamp_regression");
        if (b.proposer != proposer_for(state.controllers, i)) return fail(i, "bad_proposer");
        if (b.transactions.empty()) return fail(i, "empty_block");
        for (auto v : b.votes)
            if (!state.controllers.count(v)) return fail(i, "foreign_vote");
        if (b.votes.size() < quorum) return fail(i, "insufficient_quorum");
        if (Decision d = run_block_txs(state, b.transactions); !d) return fail(i, d.reason);
    }
    if (record_hash(chain.back()) != tip)
        return fail(chain.size() - 1, "tip_mismatch");
    return Decision::accept();
}

// ---- Ledger ----

Ledger Ledger::create(GenesisRecord genesis, LedgerConfig cfg) {
    if (Decision d = genesis_ok(genesis); !d)
        throw std::invalid_argument("invalid genesis: " + d.reason);
    Ledger l;
    Block g;
    g.index = 0;
    g.timestamp = 0;
    g.proposer = 0;
    g.genesis = std::move(genesis);
    l.state_ = init_state(*g.genesis);
    l.tip_hash_ = record_hash(g);
    l.chain_.push_back(std::move(g));
    l.cfg_ = cfg;
    return l;
}

NodeId Ledger::designated_proposer() const {
    return proposer_for(state_.controllers, chain_.size());
}

Decision Ledger::submit(Transaction tx) {
    if (!kind_matches_payload(tx)) return Decision::reject("payload_kind_mismatch");
    if (!used_tx_ids_.insert(tx.id).second) return Decision::reject("duplicate_tx_id");
    pending_.push_back(std::move(tx));
    return Decision::accept();
}

SealResult Ledger::seal_block(SimTime now) {
    SealResult res;
    if (pending_.empty()) return res;
    if (now - last_seal_time_ < cfg_.block_interval && pending_.size() < cfg_.max_block_tx)
        return res;
    last_seal_time_ = now;

    WorldState scratch = state_;
    std::vector<Transaction> valid;
    std::vector<Transaction> keep;
    for (auto& tx : pending_) {
        if (valid.size() >= cfg_.max_block_tx) {
            keep.push_back(std::move(tx));
            continue;
        }
        Decision d = validate_transaction(tx, scratch);
        if (d) {
            apply_transaction(scratch, tx);
            keep.push_back(tx);  // stays pending until the append commits it
            valid.push_back(std::move(tx));
        } else {
            DroppedTx drop{tx.id, d.reason, now, tx.issuer, tx.kind};
            res.dropped.push_back(drop);
            drop_log_.push_back(std::move(drop));
        }
    }
    pending_ = std::move(keep);
    if (valid.empty()) return res;

    Block b;
    b.index = chain_.size();
    b.prev_hash = tip_hash_;
    b.timestamp = now;
    b.proposer = designated_proposer();
    b.transactions = std::move(valid);
    res.block = std::move(b);
    return res;
}

Decision Ledger::vote_and_append(Block candidate, const std::set<NodeId>& votes) {
    if (candidate.index != chain_.size()) return Decision::reject("bad_index");
    if (candidate.prev_hash != tip_hash_) return Decision::reject("bad_prev_hash");
    if (candidate.genesis) return Decision::reject("unexpected_genesis");
    if (candidate.proposer != designated_proposer()) return Decision::reject("wrong_proposer");
    if (candidate.transactions.empty()) return Decision::reject("empty_block");
    if (candidate.timestamp < chain_.back().timestamp) return Decision::reject("timestamp_regression");
    for (auto v : votes)
        if (!state_.controllers.count(v)) return Decision::reject("foreign_vote");
    if (votes.size() < quorum_threshold()) return Decision::reject("insufficient_quorum");

    WorldState scratch = state_;
    if (Decision d = run_block_txs(scratch, candidate.transactions); !d) return d;

    std::set<TxId> included;
    for (const auto& tx : candidate.transactions) included.insert(tx.id);
    std::erase_if(pending_, [&included](const Transaction& tx) { return included.count(tx.id) > 0; });

    candidate.votes = votes;
    tip_hash_ = record_hash(candidate);
    state_ = std::move(scratch);
    chain_.push_back(std::move(candidate));
    return Decision::accept();
}

Decision Ledger::verify_chain() const { return verify_chain_blocks(chain_, tip_hash_); }

std::optional<Ledger> Ledger::from_blocks(std::vector<Block> chain, const Digest& tip,
                                          LedgerConfig cfg, Decision* why) {
    if (Decision d = verify_chain_blocks(chain, tip); !d) {
        if (why) *why = d;
        return std::nullopt;
    }
    Ledger l;
    l.state_ = *replay(chain);
    l.tip_hash_ = tip;
    l.last_seal_time_ = chain.back().timestamp;
    l.cfg_ = cfg;
    for (const auto& b : chain)
        for (const auto& tx : b.transactions) l.used_tx_ids_.insert(tx.id);
    l.chain_ = std::move(chain);
    if (why) *why = Decision::accept();
    return l;
}

// ---- snapshot file ----

static constexpr char kMagic[4] = {'B', 'S', 'D', 'N'};
static constexpr std::uint8_t kFormatVersion = 0x01;

Bytes encode_snapshot(const std::vector<Block>& chain, const Digest& tip) {
    ByteWriter w;
    w.raw(reinterpret_cast<const std::uint8_t*>(kMagic), 4);
    w.u8(kFormatVersion);
    for (const auto& b : chain) {
        ByteWriter bw;
        encode_block(bw, b);
        w.blob(bw.data());
    }
    ByteWriter tw;
    tw.raw(tip.bytes.data(), tip.bytes.size());
    w.blob(tw.data());
    return w.take();
}

std::pair<std::vector<Block>, Digest> parse_snapshot(const Bytes& data) {
    ByteReader r(data);
    std::uint8_t magic[4];
    r.raw(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0) throw DecodeError("bad snapshot magic");
    if (r.u8() != kFormatVersion) throw DecodeError("unsupported snapshot version");

    std::vector<Bytes> records;
    while (!r.done()) records.push_back(r.blob());
    if (records.empty()) throw DecodeError("missing tip record");

    // The closing record is the 32-byte tip digest; a block encoding is
    // always longer than 32 bytes, so the split is unambiguous.
    Bytes tip_rec = std::move(records.back());
    records.pop_back();
    if (tip_rec.size() != 32) throw DecodeError("missing tip record");
    Digest tip;
    std::copy(tip_rec.begin(), tip_rec.end(), tip.bytes.begin());

    std::vector<Block> chain;
    for (const auto& rec : records) {
        ByteReader br(rec);
        chain.push_back(decode_block(br));
        if (!br.done()) throw DecodeError("trailing bytes in block record");
    }
    return {std::move(chain), tip};
}

}  // namespace bsdn::ledger
