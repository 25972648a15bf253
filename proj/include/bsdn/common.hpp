#pragma once

#include <cstdint>
#include <string>
#include <utility>

namespace bsdn {

// Every principal that can appear on the ledger (controllers, switches,
// hosts/devices, users) shares one id space.
using NodeId = std::uint64_t;
using UserId = std::uint64_t;
using PolicyId = std::uint64_t;
using TaskId = std::uint64_t;
using TxId = std::uint64_t;
using LoadUnits = std::int64_t;
using SimTime = double;  // simulated seconds

// Accept/reject outcome with a machine-readable reason string, e.g.
// "stale_base", "not_right_holder", "break_at:4:prev_hash_mismatch".
struct Decision {
    bool ok = false;
    std::string reason;

    static Decision accept() { return {true, {}}; }
    static Decision reject(std::string why) { return {false, std::move(why)}; }
    explicit operator bool() const { return ok; }
};

enum class LogLevel { error = 0, info = 1, debug = 2 };

// Verbosity comes from the BSDN_LOG environment variable (error|info|debug).
LogLevel log_level();
void log_line(LogLevel lvl, const std::string& msg);

}  // namespace bsdn
