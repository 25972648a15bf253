#pragma once

// Switch flow-table reconciliation: a switch broadcasts a version check,
// controllers answer from the ledger, peer switches compare versions and
// run hash challenges, and the requester adopts by precedence (controller
// copy > ledger-verified peer copy > own). All functions here are pure;
// the simulator owns delivery, timers and session storage.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "bsdn/common.hpp"
#include "bsdn/flowtable.hpp"
#include "bsdn/ledger.hpp"
#include "bsdn/sha256.hpp"

namespace bsdn::protocol {

constexpr int kChallengePeers = 3;
constexpr int kMaxAttempts = 8;

struct UpdateRequest {
    NodeId requester = 0;
    std::uint32_t frt_version = 0;
    Digest frt_hash;  // table_hash of the requester's working table
    std::optional<flowtable::FlowRuleTable> full_table;  // present iff a responder asked
    std::uint64_t nonce = 0;  // attempt id; responses echo it
};

UpdateRequest make_request(const flowtable::FlowRuleTable& own, std::uint64_t nonce);

struct LatestFRT {
    flowtable::FlowRuleTable table;
};
struct Confirm {
    std::uint32_t version = 0;
    Digest hash;
};
struct NeedTable {};
struct Mismatch {
    std::uint32_t version = 0;
    Digest hash;
};
using ResponseBody = std::variant<LatestFRT, Confirm, NeedTable, Mismatch>;

enum class ResponderRole : std::uint8_t { controller, switch_ };

struct ResponsePacket {
    NodeId responder = 0;
    ResponderRole role = ResponderRole::switch_;
    std::uint64_t nonce = 0;
    ResponseBody body;
};

// Trace helpers.
std::string body_name(const ResponseBody& b);
std::uint32_t body_version(const ResponseBody& b);  // 0 when not applicable
Digest body_hash(const ResponseBody& b);            // zero when not applicable

// Ledger-recorded digest for (switch, version); zero digest when unknown.
Digest ledger_hash(const ledger::WorldState& state, NodeId switch_id, std::uint32_t version);

// True iff the ledger records exactly this table's hash at its version.
bool verified_against_ledger(const flowtable::FlowRuleTable& table,
                             const ledger::WorldState& state);

// Controller rule: stale version -> latest table; current version -> hash
// integrity check, Confirm on match, latest table again as repair on
// mismatch.
ResponsePacket controller_respond(const UpdateRequest& req, const ledger::WorldState& state,
                                  NodeId self);

// One hash-challenge round run by a responding switch whose version equals
// the requester's: k peers are asked for the recorded digest of the
// requester's (switch, version); Confirm is sent only if everyone agrees
// with the claimed hash.
struct HashChallenge {
    NodeId challenger = 0;
    NodeId requester = 0;       // where the final Confirm/Mismatch goes
    NodeId target_switch = 0;
    std::uint32_t target_version = 0;
    Digest claimed;
    std::uint64_t nonce = 0;
    std::size_t expected = 0;   // k
    std::map<NodeId, Digest> responses;
};

struct SwitchRespondOutcome {
    std::optional<ResponsePacket> reply;     // immediate answer, if any
    std::optional<HashChallenge> challenge;  // started on equal versions
    bool wants_table = false;                // FRT-R newer but not attached
};

// Peer-switch rule: equal versions -> hash challenge; requester newer ->
// ask for (or adopt) the full table; own newer -> send own table back.
SwitchRespondOutcome switch_respond(const UpdateRequest& req,
                                    const flowtable::FlowRuleTable& own,
                                    const ledger::WorldState& state, NodeId self);

// What a challenge recipient answers: the ledger-recorded digest.
Digest challenge_reply(const HashChallenge& c, const ledger::WorldState& state);

bool challenge_confirms(const HashChallenge& c, const ledger::WorldState& state);

// Final packet once all k responses are in or the challenge timed out.
ResponsePacket complete_challenge(const HashChallenge& c, NodeId self,
                                  const ledger::WorldState& state);

// A responder (or requester) installs an offered table only if it is newer
// than what it holds — or replaces an equal-version copy whose hash the
// ledger disowns — and the offered hash matches the ledger record.
std::optional<flowtable::FlowRuleTable> adopt_offered(const flowtable::FlowRuleTable& own,
                                                      const flowtable::FlowRuleTable& offered,
                                                      const ledger::WorldState& state);

struct ResolveResult {
    flowtable::FlowRuleTable table;  // adopted, or own unchanged
    bool success = false;            // false -> caller schedules a retry
    bool changed = false;
};

// Requester reconciliation at completion or timeout. Precedence: highest
// ledger-verified controller table, then ledger-verified peer tables, then
// a Confirm of the own version; anything else fails the attempt.
ResolveResult resolve(const flowtable::FlowRuleTable& own,
                      const std::vector<ResponsePacket>& responses,
                      const ledger::WorldState& state);

// Requesting-mode bookkeeping; at most one outstanding attempt per switch.
struct RequesterSession {
    bool requesting = false;
    std::uint64_t nonce = 0;
    std::size_t expected = 0;  // peers addressed this attempt
    SimTime deadline = 0;
    int failures = 0;          // consecutive failed attempts
    int attempts = 0;          // attempts in the current episode
    bool dirty = false;        // head moved while a request was outstanding
    std::vector<ResponsePacket> responses;
};

Decision initiate(RequesterSession& s, std::uint64_t nonce, std::size_t expected, SimTime now,
                  SimTime t_req);
void finish(RequesterSession& s, bool success);

// Delay before retry number `failures` (1-based): t_req doubled each time.
double backoff_delay(double t_req, int failures);

}  // namespace bsdn::protocol
