#include <doctest.h>

#include <set>
#include <string>
#include <vector>

#include "bsdn/ledger.hpp"
#include "bsdn/netsim.hpp"

using namespace bsdn;
using namespace bsdn::ledger;

namespace {

bool mentions(const Decision& d, const std::string& what) {
    return d.reason.find(what) != std::string::npos;
}

GenesisRecord six_controller_genesis() {
    GenesisRecord g;
    g.controllers = {1, 2, 3, 4, 5, 6};
    g.switches = {10, 11};
    g.hosts = {{30, 10, 6}};
    g.users = {{100, access::Role::admin, "ops", 3}, {101, access::Role::operator_, "lab", 1}};
    g.tasks = {{1, 2, 5.0}, {2, 1, 2.0}};
    access::AccessPolicy p;
    p.policy_id = 1;
    p.owner = 100;
    p.device_id = 30;
    p.allowed_tasks = {1, 2};
    g.policies = {p};
    g.initial_tables[10] = {
        flowtable::FlowEntry(1, 10, {}, {flowtable::ActionForward{2}}),
        flowtable::FlowEntry(2, 1, {}, {flowtable::ActionToController{}}),
    };
    return g;
}

Transaction frt_add(TxId id, NodeId sw, std::uint32_t base, std::uint64_t new_entry,
                    SimTime t, NodeId issuer = 1) {
    flowtable::FlowRuleUpdatePayload up;
    up.switch_id = sw;
    up.base_version = base;
    up.ops.push_back(flowtable::OpAdd{flowtable::FlowEntry(new_entry, 5, {}, {})});
    return {id, TxKind::FlowRuleUpdate, issuer, t, up};
}

const std::set<NodeId> all_votes{1, 2, 3, 4, 5, 6};

// Seal at the given time, append with a full vote set, and hand back the
// committed block (votes included).
Block commit(Ledger& led, SimTime now) {
    auto seal = led.seal_block(now);
    REQUIRE(seal.block.has_value());
    REQUIRE(led.vote_and_append(*seal.block, all_votes));
    return led.chain().back();
}

}  // namespace

TEST_SUITE("ledger") {

TEST_CASE("genesis block shape and initial state") {
    auto led = Ledger::create(six_controller_genesis());
    REQUIRE(led.chain().size() == 1);
    const Block& g = led.chain()[0];
    CHECK(g.index == 0);
    CHECK(g.prev_hash.is_zero());
    CHECK(g.genesis.has_value());
    CHECK(g.transactions.empty());
    CHECK(led.tip_hash() == record_hash(g));
    CHECK(led.verify_chain());

    const WorldState& st = led.state();
    CHECK(st.controllers.size() == 6);
    CHECK(st.flow_tables.at(10).version() == 1);
    CHECK(st.flow_tables.at(10).hash_history.size() == 1);
    CHECK(st.flow_tables.at(11).table.entries.empty());
    CHECK(st.right_holders.at(1) == 100);
    CHECK(st.loads.at(30).capacity == 6);
    // Users, controllers, switches and hosts all live in one principal space.
    CHECK(st.principals.count(100));
    CHECK(st.principals.count(1));
    CHECK(st.principals.count(10));
    CHECK(st.principals.count(30));
    CHECK(st.digest() == init_state(six_controller_genesis()).digest());
}

TEST_CASE("bad genesis records are refused with a cause") {
    auto dup = six_controller_genesis();
    dup.users.push_back({10, access::Role::admin, "ops", 1});  // collides with a switch id
    CHECK_THROWS_AS(Ledger::create(dup), std::invalid_argument);

    auto orphan = six_controller_genesis();
    orphan.hosts[0].server = 99;
    CHECK_THROWS_AS(Ledger::create(orphan), std::invalid_argument);

    auto empty = six_controller_genesis();
    empty.controllers.clear();
    CHECK_THROWS_AS(Ledger::create(empty), std::invalid_argument);

    auto bad_pol = six_controller_genesis();
    bad_pol.policies[0].allowed_tasks = {42};
    CHECK_THROWS_AS(Ledger::create(bad_pol), std::invalid_argument);
}

TEST_CASE("quorum threshold is a strict majority of controllers") {
    CHECK(Ledger::create(six_controller_genesis()).quorum_threshold() == 4);
    GenesisRecord two;
    two.controllers = {1, 2};
    two.switches = {10};
    CHECK(Ledger::create(two).quorum_threshold() == 2);
    GenesisRecord five;
    five.controllers = {1, 2, 3, 4, 5};
    five.switches = {10};
    CHECK(Ledger::create(five).quorum_threshold() == 3);
}

TEST_CASE("proposer rotates round-robin over the sorted controller set") {
    auto led = Ledger::create(six_controller_genesis());
    std::vector<NodeId> expect{2, 3, 4, 5, 6, 1, 2};  // next index starts at 1
    for (int i = 0; i < 7; ++i) {
        CHECK(led.designated_proposer() == expect[i]);
        REQUIRE(led.submit(frt_add(100 + i, 10, static_cast<std::uint32_t>(i + 1), 50 + i,
                                   i + 0.1)));
        commit(led, i + 1.0);
    }
}

TEST_CASE("submit refuses reused ids and mismatched payloads") {
    auto led = Ledger::create(six_controller_genesis());
    REQUIRE(led.submit(frt_add(1, 10, 1, 100, 0.1)));
    auto dup = frt_add(1, 10, 1, 101, 0.2);
    CHECK(led.submit(dup).reason == "duplicate_tx_id");

    Transaction weird = frt_add(2, 10, 1, 102, 0.3);
    weird.kind = TxKind::LoadAdmit;  // payload stays a flow update
    CHECK(led.submit(weird).reason == "payload_kind_mismatch");

    // Ids stay burned even after the original commits.
    commit(led, 1.0);
    CHECK(led.submit(frt_add(1, 10, 2, 103, 1.1)).reason == "duplicate_tx_id");
}

TEST_CASE("seal respects the block interval and the size cap") {
    LedgerConfig cfg;
    cfg.block_interval = 1.0;
    cfg.max_block_tx = 3;
    auto led = Ledger::create(six_controller_genesis(), cfg);

    CHECK_FALSE(led.seal_block(5.0).block.has_value());  // empty pool: nothing to do

    REQUIRE(led.submit(frt_add(1, 10, 1, 100, 0.1)));
    CHECK_FALSE(led.seal_block(0.5).block.has_value());  // too early
    auto s = led.seal_block(1.0);
    REQUIRE(s.block.has_value());
    CHECK(s.block->transactions.size() == 1);
    CHECK(s.block->proposer == led.designated_proposer());
    REQUIRE(led.vote_and_append(*s.block, all_votes));

    // Cap reached: seals immediately regardless of the interval.
    REQUIRE(led.submit(frt_add(2, 10, 2, 101, 1.1)));
    REQUIRE(led.submit(frt_add(3, 10, 3, 102, 1.15)));
    REQUIRE(led.submit(frt_add(4, 10, 4, 103, 1.2)));
    auto s2 = led.seal_block(1.3);
    REQUIRE(s2.block.has_value());
    CHECK(s2.block->transactions.size() == 3);
    // FIFO: submission order is commit order.
    CHECK(s2.block->transactions[0].id == 2);
    CHECK(s2.block->transactions[1].id == 3);
    CHECK(s2.block->transactions[2].id == 4);
}

TEST_CASE("chained base versions commit inside a single block") {
    auto led = Ledger::create(six_controller_genesis());
    REQUIRE(led.submit(frt_add(1, 10, 1, 100, 0.1)));
    REQUIRE(led.submit(frt_add(2, 10, 2, 101, 0.2)));  // valid only after tx 1 applies
    Block b = commit(led, 1.0);
    CHECK(b.transactions.size() == 2);
    CHECK(led.state().flow_tables.at(10).version() == 3);
    CHECK(led.state().flow_tables.at(10).hash_history.size() == 3);

    // Two updates from the same base: the second is stale at seal time.
    REQUIRE(led.submit(frt_add(3, 10, 3, 102, 1.1)));
    REQUIRE(led.submit(frt_add(4, 10, 3, 103, 1.2)));
    auto s = led.seal_block(2.0);
    REQUIRE(s.block.has_value());
    CHECK(s.block->transactions.size() == 1);
    REQUIRE(s.dropped.size() == 1);
    CHECK(s.dropped[0].tx_id == 4);
    CHECK(s.dropped[0].reason == "stale_base");
    REQUIRE(led.vote_and_append(*s.block, all_votes));
    CHECK(led.pending().empty());
    CHECK(led.drop_log().size() == 1);
}

TEST_CASE("append rejects non-chaining, unauthorized or undervoted candidates") {
    auto led = Ledger::create(six_controller_genesis());
    REQUIRE(led.submit(frt_add(1, 10, 1, 100, 0.1)));
    auto s = led.seal_block(1.0);
    REQUIRE(s.block.has_value());
    Block good = *s.block;

    CHECK(led.vote_and_append(good, {1, 2, 3}).reason == "insufficient_quorum");
    CHECK(led.vote_and_append(good, {1, 2, 3, 99}).reason == "foreign_vote");

    Block wrong_prev = good;
    wrong_prev.prev_hash.bytes[0] ^= 1;
    CHECK(led.vote_and_append(wrong_prev, all_votes).reason == "bad_prev_hash");

    Block wrong_proposer = good;
    wrong_proposer.proposer = good.proposer == 1 ? 2 : 1;
    CHECK(led.vote_and_append(wrong_proposer, all_votes).reason == "wrong_proposer");

    Block wrong_index = good;
    wrong_index.index = 7;
    CHECK(led.vote_and_append(wrong_index, all_votes).reason == "bad_index");

    Block back_in_time = good;
    back_in_time.timestamp = -1.0;
    CHECK(led.vote_and_append(back_in_time, all_votes).reason == "timestamp_regression");

    Block tampered = good;
    std::get<flowtable::FlowRuleUpdatePayload>(tampered.transactions[0].payload).base_version = 9;
    CHECK(mentions(led.vote_and_append(tampered, all_votes), "invalid_tx"));

    // The intact candidate still appends, and pending drains.
    REQUIRE(led.vote_and_append(good, all_votes));
    CHECK(led.chain().size() == 2);
    CHECK(led.pending().empty());
    CHECK(led.tip_hash() == record_hash(led.chain().back()));
}

TEST_CASE("every policy and load kind flows through the chain") {
    auto led = Ledger::create(six_controller_genesis());

    access::AccessPolicy p2;
    p2.policy_id = 2;
    p2.owner = 101;
    p2.device_id = 30;
    p2.allowed_tasks = {2};
    REQUIRE(led.submit({10, TxKind::PolicyCreation, 101, 0.1, p2}));
    REQUIRE(led.submit({11, TxKind::RightTransfer, 100, 0.2,
                        access::RightTransferPayload{1, 100, 101}}));
    commit(led, 1.0);
    CHECK(led.state().policies.at(2).owner == 101);
    CHECK(led.state().right_holders.at(2) == 101);  // creation hands the owner the right
    CHECK(led.state().right_holders.at(1) == 101);  // transfer moved it

    // An owner update does not claw back a transferred right.
    access::AccessPolicy p1 = led.state().policies.at(1);
    p1.allowed_tasks = {1};
    REQUIRE(led.submit({12, TxKind::PolicyUpdate, 100, 1.1, p1}));
    REQUIRE(led.submit({13, TxKind::AccessGrant, 2, 1.2,
                        access::AccessGrantPayload{{101, 30, 2, 1.2}, 2}}));
    commit(led, 2.0);
    CHECK(led.state().policies.at(1).allowed_tasks == std::set<TaskId>{1});
    CHECK(led.state().right_holders.at(1) == 101);

    REQUIRE(led.submit({14, TxKind::LoadAdmit, 3, 2.1,
                        loadbal::LoadAdmitPayload{500, {101, 30, 2, 2.1}}}));
    commit(led, 3.0);
    CHECK(led.state().loads.at(30).current == 1);
    REQUIRE(led.submit({15, TxKind::LoadRelease, 3, 3.1, loadbal::LoadReleasePayload{500, 30}}));
    commit(led, 4.0);
    CHECK(led.state().loads.at(30).current == 0);

    CHECK(led.verify_chain());
    // Replay from scratch lands on the identical state digest.
    auto replayed = replay(led.chain());
    REQUIRE(replayed.has_value());
    CHECK(replayed->digest() == led.state().digest());
}

TEST_CASE("replay digest matches incremental state after every block") {
    netsim::Rng rng(91);
    auto led = Ledger::create(six_controller_genesis());
    std::uint32_t ver = 1;
    std::uint64_t eid = 100;
    for (int b = 0; b < 6; ++b) {
        int n = static_cast<int>(rng.uniform_int(1, 3));
        for (int i = 0; i < n; ++i)
            REQUIRE(led.submit(frt_add(b * 10 + i + 1, 10, ver++, eid++, b + 0.1)));
        commit(led, b + 1.0);
        auto fresh = replay(led.chain());
        REQUIRE(fresh.has_value());
        CHECK(fresh->digest() == led.state().digest());
    }
}

TEST_CASE("verification pinpoints structural breaks") {
    auto led = Ledger::create(six_controller_genesis());
    for (int b = 0; b < 3; ++b) {
        REQUIRE(led.submit(frt_add(b + 1, 10, static_cast<std::uint32_t>(b + 1), 100 + b,
                                   b + 0.1)));
        commit(led, b + 1.0);
    }
    const Digest tip = led.tip_hash();
    REQUIRE(verify_chain_blocks(led.chain(), tip));

    auto tamper_mid = led.chain();
    tamper_mid[1].timestamp += 0.5;  // identity change breaks the next link
    CHECK(mentions(verify_chain_blocks(tamper_mid, tip), "break_at:2:prev_hash_mismatch"));

    auto tamper_tip = led.chain();
    std::get<flowtable::FlowRuleUpdatePayload>(tamper_tip[3].transactions[0].payload)
        .ops.clear();  // newest block: only the tip digest pins it
    CHECK(mentions(verify_chain_blocks(tamper_tip, tip), "tip_mismatch"));

    auto unvoted = led.chain();
    unvoted[2].votes = {1, 2, 3};
    CHECK(mentions(verify_chain_blocks(unvoted, tip), "break_at:2:insufficient_quorum"));

    auto outsider = led.chain();
    outsider[2].votes.insert(42);
    CHECK(mentions(verify_chain_blocks(outsider, tip), "break_at:2:foreign_vote"));

    // Swapping in a different but still-valid quorum passes every per-block
    // vote check, so the chaining itself has to catch it: each prev_hash
    // commits to the predecessor's full record, votes included.
    auto requorum = led.chain();
    requorum[2].votes.erase(6);  // {1..5}: legal quorum, wrong certificate
    CHECK(mentions(verify_chain_blocks(requorum, tip), "break_at:3:prev_hash_mismatch"));

    // On the newest block there is no successor; the tip digest seals it.
    auto requorum_tip = led.chain();
    requorum_tip[3].votes.erase(6);
    CHECK(mentions(verify_chain_blocks(requorum_tip, tip), "tip_mismatch"));

    auto wrong_tip = tip;
    wrong_tip.bytes[31] ^= 0xff;
    CHECK(mentions(verify_chain_blocks(led.chain(), wrong_tip), "tip_mismatch"));
}

TEST_CASE("snapshot bytes round-trip and reload into a working ledger") {
    auto led = Ledger::create(six_controller_genesis());
    REQUIRE(led.submit(frt_add(1, 10, 1, 100, 0.1)));
    REQUIRE(led.submit({2, TxKind::RightTransfer, 100, 0.2,
                        access::RightTransferPayload{1, 100, 101}}));
    commit(led, 1.0);
    REQUIRE(led.submit(frt_add(3, 11, 1, 200, 1.1)));
    commit(led, 2.0);

    Bytes snap = encode_snapshot(led);
    auto [blocks, tip] = parse_snapshot(snap);
    CHECK(tip == led.tip_hash());
    REQUIRE(blocks.size() == led.chain().size());
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        CHECK(hash_block(blocks[i]) == hash_block(led.chain()[i]));
        CHECK(blocks[i].votes == led.chain()[i].votes);
    }
    CHECK(encode_snapshot(blocks, tip) == snap);

    Decision why;
    auto reloaded = Ledger::from_blocks(blocks, tip, led.config(), &why);
    REQUIRE(reloaded.has_value());
    CHECK(reloaded->state().digest() == led.state().digest());
    CHECK(reloaded->tip_hash() == led.tip_hash());
    // The reloaded ledger keeps working: ids from the chain are still burned.
    CHECK(reloaded->submit(frt_add(1, 10, 3, 300, 2.1)).reason == "duplicate_tx_id");
    REQUIRE(reloaded->submit(frt_add(9, 10, 3, 300, 2.1)));

    auto bad = Ledger::from_blocks(blocks, Digest{}, led.config(), &why);
    CHECK_FALSE(bad.has_value());
    CHECK(mentions(why, "tip_mismatch"));
}

TEST_CASE("snapshot parsing rejects malformed input") {
    auto led = Ledger::create(six_controller_genesis());
    REQUIRE(led.submit(frt_add(1, 10, 1, 100, 0.1)));
    commit(led, 1.0);
    Bytes snap = encode_snapshot(led);

    Bytes truncated(snap.begin(), snap.end() - 7);
    CHECK_THROWS_AS(parse_snapshot(truncated), DecodeError);

    Bytes bad_magic = snap;
    bad_magic[0] = 'X';
    CHECK_THROWS_AS(parse_snapshot(bad_magic), DecodeError);

    Bytes bad_version = snap;
    bad_version[4] = 0x7f;
    CHECK_THROWS_AS(parse_snapshot(bad_version), DecodeError);

    Bytes no_tip(snap.begin(), snap.begin() + 5);
    CHECK_THROWS_AS(parse_snapshot(no_tip), DecodeError);
}

TEST_CASE("block decoding enforces canonical vote order") {
    auto led = Ledger::create(six_controller_genesis());
    REQUIRE(led.submit(frt_add(1, 10, 1, 100, 0.1)));
    Block b = commit(led, 1.0);

    ByteWriter w;
    Bytes ident = identity_encoding(b);
    w.raw(ident.data(), ident.size());
    w.u32(2);
    w.u64(5);
    w.u64(3);  // descending: not canonical
    Bytes bytes = w.take();
    ByteReader r(bytes);
    CHECK_THROWS_AS(decode_block(r), DecodeError);

    // The canonical encoding itself round-trips.
    ByteWriter w2;
    encode_block(w2, b);
    Bytes ok = w2.take();
    ByteReader r2(ok);
    Block back = decode_block(r2);
    CHECK(r2.done());
    CHECK(hash_block(back) == hash_block(b));
    CHECK(back.votes == b.votes);
}

TEST_CASE("vote mutations leave block identity untouched but change its record") {
    auto led = Ledger::create(six_controller_genesis());
    REQUIRE(led.submit(frt_add(1, 10, 1, 100, 0.1)));
    Block b = commit(led, 1.0);
    Digest identity = hash_block(b);
    Digest record = record_hash(b);
    b.votes.erase(b.votes.begin());
    b.votes.insert(42);
    // Identity is what controllers vote on, so it cannot depend on the votes;
    // the record hash is what successors link to, so it must.
    CHECK(hash_block(b) == identity);
    CHECK(record_hash(b) != record);
}

TEST_CASE("invalid issuers and unknown switches are rejected at validation") {
    auto led = Ledger::create(six_controller_genesis());
    CHECK(led.submit(frt_add(1, 10, 1, 100, 0.1, /*issuer=*/777)));  // queued...
    auto s = led.seal_block(1.0);
    CHECK_FALSE(s.block.has_value());  // ...but dropped at seal: pool all-invalid
    REQUIRE(s.dropped.size() == 1);
    CHECK(s.dropped[0].reason == "unknown_issuer");

    CHECK(led.submit(frt_add(2, 99, 1, 100, 1.1)));
    auto s2 = led.seal_block(2.0);
    CHECK_FALSE(s2.block.has_value());
    REQUIRE(s2.dropped.size() == 1);
    CHECK(s2.dropped[0].reason == "unknown_switch");
}

}  // TEST_SUITE
