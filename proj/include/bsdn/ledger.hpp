#pragma once

// Append-only, hash-chained, quorum-verified block ledger. Single source of
// truth for flow tables, policies, right holders and device loads. Each
// block has two hashes: hash_block covers the canonical encoding with votes
// excluded (the identity controllers vote on, so collecting votes does not
// change the thing being voted for), while record_hash also covers the vote
// set. prev_hash links and the snapshot tip digest commit to record_hash,
// so a successor seals its predecessor's quorum certificate and the newest
// block is pinned by the tip even though no successor commits to it.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "bsdn/access.hpp"
#include "bsdn/bytes.hpp"
#include "bsdn/common.hpp"
#include "bsdn/flowtable.hpp"
#include "bsdn/loadbal.hpp"
#include "bsdn/sha256.hpp"

namespace bsdn::ledger {

enum class TxKind : std::uint8_t {
    FlowRuleUpdate = 0,
    PolicyCreation = 1,
    PolicyUpdate = 2,
    RightTransfer = 3,
    AccessGrant = 4,
    LoadAdmit = 5,
    LoadRelease = 6,
};

std::string tx_kind_name(TxKind k);

using TxPayload = std::variant<flowtable::FlowRuleUpdatePayload,  // FlowRuleUpdate
                               access::AccessPolicy,              // PolicyCreation / PolicyUpdate
                               access::RightTransferPayload,      // RightTransfer
                               access::AccessGrantPayload,        // AccessGrant
                               loadbal::LoadAdmitPayload,         // LoadAdmit
                               loadbal::LoadReleasePayload>;      // LoadRelease

struct Transaction {
    TxId id = 0;
    TxKind kind = TxKind::FlowRuleUpdate;
    NodeId issuer = 0;
    SimTime sim_time = 0;
    TxPayload payload;
};

bool kind_matches_payload(const Transaction& tx);

// Initial replicated state, embedded in (and hashed as part of) block 0.
struct GenesisRecord {
    struct Host {
        NodeId id = 0;
        NodeId server = 0;        // the switch this device hangs off
        LoadUnits capacity = 0;
    };

    std::vector<NodeId> controllers;
    std::vector<NodeId> switches;
    std::vector<Host> hosts;
    std::vector<access::UserAttributes> users;
    std::vector<loadbal::TaskKind> tasks;
    std::vector<access::AccessPolicy> policies;
    std::map<NodeId, std::vector<flowtable::FlowEntry>> initial_tables;
};

void encode_genesis(ByteWriter& w, const GenesisRecord& g);
GenesisRecord decode_genesis(ByteReader& r);

struct Block {
    std::uint64_t index = 0;
    Digest prev_hash;       // all-zero for genesis
    SimTime timestamp = 0;
    NodeId proposer = 0;
    std::optional<GenesisRecord> genesis;  // block 0 only
    std::vector<Transaction> transactions; // non-empty for all non-genesis blocks
    std::set<NodeId> votes;                // excluded from identity hashing
};

// Canonical encoding of everything except votes.
Bytes identity_encoding(const Block& b);
Digest hash_block(const Block& b);
// Hash over the full block record, votes included: what the next block's
// prev_hash and the snapshot tip record commit to.
Digest record_hash(const Block& b);

// identity bytes followed by the sorted vote list.
void encode_block(ByteWriter& w, const Block& b);
Block decode_block(ByteReader& r);
void encode_tx(ByteWriter& w, const Transaction& tx);
Transaction decode_tx(ByteReader& r);

// Per-switch flow table state: the materialized table plus the hash of
// every committed version (hash_history[v-1] is the hash at version v).
struct FrtState {
    flowtable::FlowRuleTable table;
    std::vector<Digest> hash_history;

    std::uint32_t version() const { return table.version; }
    const Digest& current_hash() const { return hash_history.back(); }
    const Digest* hash_at(std::uint32_t version) const {
        if (version == 0 || version > hash_history.size()) return nullptr;
        return &hash_history[version - 1];
    }
};

// Deterministic product of replaying a chain prefix; identical at every
// honest node holding the same chain.
struct WorldState {
    std::set<NodeId> principals;  // registered issuers: nodes and users
    std::set<NodeId> controllers;
    std::map<UserId, access::UserAttributes> users;
    std::map<TaskId, loadbal::TaskKind> tasks;
    std::map<NodeId, FrtState> flow_tables;
    std::map<PolicyId, access::AccessPolicy> policies;
    std::map<PolicyId, UserId> right_holders;
    std::map<NodeId, loadbal::DeviceLoad> loads;
    std::set<std::uint64_t> used_request_ids;

    Bytes canonical_encoding() const;
    Digest digest() const;
};

WorldState init_state(const GenesisRecord& g);

Decision validate_transaction(const Transaction& tx, const WorldState& state);
// Precondition: validate_transaction accepted against this state.
void apply_transaction(WorldState& state, const Transaction& tx);

// Walks the chain from genesis, validating structure and every transaction.
// Returns nothing if the chain is invalid.
std::optional<WorldState> replay(const std::vector<Block>& chain);

struct DroppedTx {
    TxId tx_id = 0;
    std::string reason;
    SimTime time = 0;
    NodeId issuer = 0;
    TxKind kind = TxKind::FlowRuleUpdate;
};

struct SealResult {
    std::optional<Block> block;
    std::vector<DroppedTx> dropped;
};

struct LedgerConfig {
    SimTime block_interval = 1.0;   // T_b
    std::size_t max_block_tx = 64;  // B_max
};

class Ledger {
public:
    // An empty ledger is only a placeholder; build real ones with create
    // or from_blocks.
    Ledger() = default;

    static Ledger create(GenesisRecord genesis, LedgerConfig cfg = {});

    // Rebuilds a ledger from decoded blocks + expected tip digest; runs the
    // full chain verification and reports the failure through `why`.
    static std::optional<Ledger> from_blocks(std::vector<Block> chain, const Digest& tip,
                                             LedgerConfig cfg, Decision* why = nullptr);

    const std::vector<Block>& chain() const { return chain_; }
    const std::vector<Transaction>& pending() const { return pending_; }
    const WorldState& state() const { return state_; }
    const std::set<NodeId>& controllers() const { return state_.controllers; }
    const Digest& tip_hash() const { return tip_hash_; }
    const LedgerConfig& config() const { return cfg_; }

    std::size_t quorum_threshold() const { return state_.controllers.size() / 2 + 1; }
    // Round-robin over the sorted controller set by next block index.
    NodeId designated_proposer() const;

    // Queues a transaction; rejects reused ids.
    Decision submit(Transaction tx);

    // Designated proposer's seal step. Produces a candidate only when the
    // pool is non-empty and either T_b elapsed since the last attempt or
    // B_max is reached. Invalid pending transactions are dropped here.
    SealResult seal_block(SimTime now);

    // Appends iff the candidate chains to the tip, has a controller quorum,
    // and every transaction re-validates; purges included txs from pending.
    Decision vote_and_append(Block candidate, const std::set<NodeId>& votes);

    // Full structural + replay verification of the stored chain.
    Decision verify_chain() const;

    const std::vector<DroppedTx>& drop_log() const { return drop_log_; }

private:
    std::vector<Block> chain_;
    std::vector<Transaction> pending_;
    WorldState state_;
    Digest tip_hash_;
    SimTime last_seal_time_ = 0;
    LedgerConfig cfg_;
    std::set<TxId> used_tx_ids_;
    std::vector<DroppedTx> drop_log_;
};

// Structural verification shared by Ledger::verify_chain and snapshot
// loading: hash links, quorum, canonical votes, replay validity, tip match.
Decision verify_chain_blocks(const std::vector<Block>& chain, const Digest& tip);

// Snapshot file: "BSDN" magic, format version 0x01, then each block as a
// 4-byte big-endian length + canonical block bytes, closed by a 32-byte
// tip record holding the newest block's record hash.
Bytes encode_snapshot(const std::vector<Block>& chain, const Digest& tip);
inline Bytes encode_snapshot(const Ledger& l) { return encode_snapshot(l.chain(), l.tip_hash()); }
// Throws DecodeError on malformed input.
std::pair<std::vector<Block>, Digest> parse_snapshot(const Bytes& data);

}  // namespace bsdn::ledger
