#pragma once

// Versioned OpenFlow-style flow rule tables: packet matching, canonical
// hashing and optimistic-concurrency updates. Tables are immutable values;
// apply_update produces a new table. Counters are node-local runtime state
// and never enter the canonical encoding.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "bsdn/bytes.hpp"
#include "bsdn/common.hpp"
#include "bsdn/sha256.hpp"

namespace bsdn::flowtable {

// Absent field = wildcard. IP matching is prefix-based (0..32).
struct IpPrefix {
    std::uint32_t addr = 0;
    std::uint8_t prefix_len = 32;

    bool matches(std::uint32_t ip) const {
        if (prefix_len == 0) return true;
        std::uint32_t mask = prefix_len >= 32 ? 0xffffffffu : ~((1u << (32 - prefix_len)) - 1);
        return (ip & mask) == (addr & mask);
    }
    auto operator<=>(const IpPrefix&) const = default;
};

struct MatchFields {
    std::optional<std::uint16_t> in_port;
    std::optional<std::uint64_t> eth_src;  // lower 48 bits
    std::optional<std::uint64_t> eth_dst;
    std::optional<IpPrefix> ip_src;
    std::optional<IpPrefix> ip_dst;
    std::optional<std::uint8_t> ip_proto;
    std::optional<std::uint16_t> l4_src;
    std::optional<std::uint16_t> l4_dst;

    auto operator<=>(const MatchFields&) const = default;
};

struct ActionForward {
    std::uint16_t port = 0;
    auto operator<=>(const ActionForward&) const = default;
};
struct ActionDrop {
    auto operator<=>(const ActionDrop&) const = default;
};
struct ActionToController {
    auto operator<=>(const ActionToController&) const = default;
};
using Action = std::variant<ActionForward, ActionDrop, ActionToController>;

struct FlowCounters {
    std::uint64_t packets = 0;
    std::uint64_t bytes = 0;
};

struct FlowEntry {
    std::uint64_t entry_id = 0;
    std::uint16_t priority = 0;
    MatchFields match;
    std::vector<Action> actions;  // empty is normalized to [Drop]
    FlowCounters counters;        // per-flow; excluded from hashing

    FlowEntry() = default;
    FlowEntry(std::uint64_t id, std::uint16_t prio, MatchFields m, std::vector<Action> acts);
};

struct TableCounters {
    std::uint64_t lookups = 0;
    std::uint64_t matches = 0;
    std::map<std::uint16_t, FlowCounters> per_port;
    std::uint64_t queue_enqueued = 0;  // single default queue
};

// All concrete header fields plus size and traffic class.
struct Packet {
    std::uint16_t in_port = 0;
    std::uint64_t eth_src = 0;
    std::uint64_t eth_dst = 0;
    std::uint32_t ip_src = 0;
    std::uint32_t ip_dst = 0;
    std::uint8_t ip_proto = 0;
    std::uint16_t l4_src = 0;
    std::uint16_t l4_dst = 0;
    std::uint32_t size_bytes = 64;  // >= 64
    enum class Class { legit, attack } cls = Class::legit;
};

struct FlowRuleTable {
    NodeId switch_id = 0;
    std::uint32_t version = 1;
    std::vector<FlowEntry> entries;
    TableCounters counters;  // excluded from hashing

    const FlowEntry* find(std::uint64_t entry_id) const;
};

struct Matched {
    std::uint64_t entry_id = 0;
    std::vector<Action> actions;
};
struct TableMiss {};
using MatchResult = std::variant<Matched, TableMiss>;

// Highest priority wins; ties broken by lowest entry_id. Updates the
// table/flow/port/queue counters as a side effect.
MatchResult match_packet(FlowRuleTable& table, const Packet& pkt);

bool field_match(const MatchFields& m, const Packet& pkt);

// Canonical encoding: switch_id, version, entries sorted by
// (priority desc, entry_id asc); counters excluded.
Bytes canonical_encoding(const FlowRuleTable& table);
Digest table_hash(const FlowRuleTable& table);

struct OpAdd {
    FlowEntry entry;
};
struct OpDelete {
    std::uint64_t entry_id = 0;
};
struct OpModify {
    FlowEntry entry;  // replaces the entry with the same id
};
using UpdateOp = std::variant<OpAdd, OpDelete, OpModify>;

struct FlowRuleUpdatePayload {
    NodeId switch_id = 0;
    std::uint32_t base_version = 0;
    std::vector<UpdateOp> ops;
};

// Optimistic concurrency: the update must be based on the current version
// and every op must reference a valid entry id.
Decision check_update(const FlowRuleUpdatePayload& update, const FlowRuleTable& current);

// Precondition: check_update accepted. Returns a new table with
// version = old + 1 and the ops applied in order.
FlowRuleTable apply_update(const FlowRuleTable& table, const FlowRuleUpdatePayload& update);

// Text format, one entry per line:
//   priority=<n> match=<k=v,...> actions=<a;...>
// wildcards omitted; e.g.
//   priority=10 match=ip_dst=10.0.0.1/32 actions=forward(2)
std::string format_entry(const FlowEntry& e);
// entry_id is assigned by the caller (file order in scenario loading).
FlowEntry parse_entry(const std::string& line, std::uint64_t entry_id);

void encode_entry(ByteWriter& w, const FlowEntry& e);
FlowEntry decode_entry(ByteReader& r);
void encode_table(ByteWriter& w, const FlowRuleTable& t);
FlowRuleTable decode_table(ByteReader& r);
void encode_update(ByteWriter& w, const FlowRuleUpdatePayload& u);
FlowRuleUpdatePayload decode_update(ByteReader& r);

}  // namespace bsdn::flowtable
