#include "bsdn/flowtable.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace bsdn::flowtable {

FlowEntry::FlowEntry(std::uint64_t id, std::uint16_t prio, MatchFields m, std::vector<Action> acts)
    : entry_id(id), priority(prio), match(std::move(m)), actions(std::move(acts)) {
    if (actions.empty()) actions.push_back(ActionDrop{});
}

const FlowEntry* FlowRuleTable::find(std::uint64_t entry_id) const {
    for (const auto& e : entries)
        if (e.entry_id == entry_id) return &e;
    return nullptr;
}

bool field_match(const MatchFields& m, const Packet& pkt) {
    if (m.in_port && *m.in_port != pkt.in_port) return false;
    if (m.eth_src && *m.eth_src != pkt.eth_src) return false;
    if (m.eth_dst && *m.eth_dst != pkt.eth_dst) return false;
    if (m.ip_src && !m.ip_src->matches(pkt.ip_src)) return false;
    if (m.ip_dst && !m.ip_dst->matches(pkt.ip_dst)) return false;
    if (m.ip_proto && *m.ip_proto != pkt.ip_proto) return false;
    if (m.l4_src && *m.l4_src != pkt.l4_src) return false;
    if (m.l4_dst && *m.l4_dst != pkt.l4_dst) return false;
    return true;
}

MatchResult match_packet(FlowRuleTable& table, const Packet& pkt) {
    table.counters.lookups++;
    FlowEntry* best = nullptr;
    for (auto& e : table.entries) {
        if (!field_match(e.match, pkt)) continue;
        if (!best || e.priority > best->priority ||
            (e.priority == best->priority && e.entry_id < best->entry_id)) {
            best = &e;
        }
    }
    if (!best) return TableMiss{};

    table.counters.matches++;
    best->counters.packets++;
    best->counters.bytes += pkt.size_bytes;
    for (const auto& a : best->actions) {
        if (const auto* f = std::get_if<ActionForward>(&a)) {
            auto& pc = table.counters.per_port[f->port];
            pc.packets++;
            pc.bytes += pkt.size_bytes;
            table.counters.queue_enqueued++;
        }
    }
    return Matched{best->entry_id, best->actions};
}

namespace {

void encode_match(ByteWriter& w, const MatchFields& m) {
    auto opt16 = [&](const std::optional<std::uint16_t>& v) {
        w.u8(v ? 1 : 0);
        if (v) w.u16(*v);
    };
    opt16(m.in_port);
    auto opt48 = [&](const std::optional<std::uint64_t>& v) {
        w.u8(v ? 1 : 0);
        if (v)
            for (int i = 5; i >= 0; --i) w.u8(static_cast<std::uint8_t>((*v >> (8 * i)) & 0xff));
    };
    opt48(m.eth_src);
    opt48(m.eth_dst);
    auto optip = [&](const std::optional<IpPrefix>& v) {
        w.u8(v ? 1 : 0);
        if (v) {
            w.u32(v->addr);
            w.u8(v->prefix_len);
        }
    };
    optip(m.ip_src);
    optip(m.ip_dst);
    w.u8(m.ip_proto ? 1 : 0);
    if (m.ip_proto) w.u8(*m.ip_proto);
    opt16(m.l4_src);
    opt16(m.l4_dst);
}

MatchFields decode_match(ByteReader& r) {
    MatchFields m;
    if (r.flag()) m.in_port = r.u16();
    auto get48 = [&]() {
        std::uint64_t v = 0;
        for (int i = 0; i < 6; ++i) v = (v << 8) | r.u8();
        return v;
    };
    if (r.flag()) m.eth_src = get48();
    if (r.flag()) m.eth_dst = get48();
    auto getip = [&]() {
        IpPrefix p;
        p.addr = r.u32();
        p.prefix_len = r.u8();
        if (p.prefix_len > 32) throw DecodeError("ip prefix length out of range");
        return p;
    };
    if (r.flag()) m.ip_src = getip();
    if (r.flag()) m.ip_dst = getip();
    if (r.flag()) m.ip_proto = r.u8();
    if (r.flag()) m.l4_src = r.u16();
    if (r.flag()) m.l4_dst = r.u16();
    return m;
}

void encode_action(ByteWriter& w, const Action& a) {
    if (const auto* f = std::get_if<ActionForward>(&a)) {
        w.u8(0);
        w.u16(f->port);
    } else if (std::holds_alternative<ActionDrop>(a)) {
        w.u8(1);
    } else {
        w.u8(2);
    }
}

Action decode_action(ByteReader& r) {
    switch (r.u8()) {
        case 0:
            return ActionForward{r.u16()};
        case 1:
            return ActionDrop{};
        case 2:
            return ActionToController{};
        default:
            throw DecodeError("bad action tag");
    }
}

std::vector<const FlowEntry*> sorted_view(const FlowRuleTable& t) {
    std::vector<const FlowEntry*> v;
    v.reserve(t.entries.size());
    for (const auto& e : t.entries) v.push_back(&e);
    std::sort(v.begin(), v.end(), [](const FlowEntry* a, const FlowEntry* b) {
        if (a->priority != b->priority) return a->priority > b->priority;
        return a->entry_id < b->entry_id;
    });
    return v;
}

}  // namespace

void encode_entry(ByteWriter& w, const FlowEntry& e) {
    w.u64(e.entry_id);
    w.u16(e.priority);
    encode_match(w, e.match);
    w.u32(static_cast<std::uint32_t>(e.actions.size()));
    for (const auto& a : e.actions) encode_action(w, a);
}

FlowEntry decode_entry(ByteReader& r) {
    FlowEntry e;
    e.entry_id = r.u64();
    e.priority = r.u16();
    e.match = decode_match(r);
    std::uint32_t n = r.u32();
    for (std::uint32_t i = 0; i < n; ++i) e.actions.push_back(decode_action(r));
    if (e.actions.empty()) e.actions.push_back(ActionDrop{});
    return e;
}

Bytes canonical_encoding(const FlowRuleTable& table) {
    ByteWriter w;
    encode_table(w, table);
    return w.take();
}

void encode_table(ByteWriter& w, const FlowRuleTable& t) {
    w.u64(t.switch_id);
    w.u32(t.version);
    auto sorted = sorted_view(t);
    w.u32(static_cast<std::uint32_t>(sorted.size()));
    for (const auto* e : sorted) encode_entry(w, *e);
}

FlowRuleTable decode_table(ByteReader& r) {
    FlowRuleTable t;
    t.switch_id = r.u64();
    t.version = r.u32();
    std::uint32_t n = r.u32();
    for (std::uint32_t i = 0; i < n; ++i) t.entries.push_back(decode_entry(r));
    return t;
}

Digest table_hash(const FlowRuleTable& table) {
    return sha256(canonical_encoding(table));
}

Decision check_update(const FlowRuleUpdatePayload& update, const FlowRuleTable& current) {
    if (update.base_version != current.version) return Decision::reject("stale_base");
    // Track adds/deletes within the update so ops see the running entry set.
    std::vector<std::uint64_t> present;
    for (const auto& e : current.entries) present.push_back(e.entry_id);
    auto has = [&](std::uint64_t id) {
        return std::find(present.begin(), present.end(), id) != present.end();
    };
    for (const auto& op : update.ops) {
        if (const auto* add = std::get_if<OpAdd>(&op)) {
            if (has(add->entry.entry_id)) return Decision::reject("duplicate_entry");
            present.push_back(add->entry.entry_id);
        } else if (const auto* del = std::get_if<OpDelete>(&op)) {
            if (!has(del->entry_id)) return Decision::reject("unknown_entry");
            present.erase(std::find(present.begin(), present.end(), del->entry_id));
        } else {
            const auto& mod = std::get<OpModify>(op);
            if (!has(mod.entry.entry_id)) return Decision::reject("unknown_entry");
        }
    }
    return Decision::accept();
}

FlowRuleTable apply_update(const FlowRuleTable& table, const FlowRuleUpdatePayload& update) {
    if (auto d = check_update(update, table); !d.ok)
        throw std::invalid_argument("apply_update precondition: " + d.reason);
    FlowRuleTable out = table;
    out.version = table.version + 1;
    for (const auto& op : update.ops) {
        if (const auto* add = std::get_if<OpAdd>(&op)) {
            FlowEntry e = add->entry;
            if (e.actions.empty()) e.actions.push_back(ActionDrop{});
            e.counters = {};
            out.entries.push_back(std::move(e));
        } else if (const auto* del = std::get_if<OpDelete>(&op)) {
            out.entries.erase(
                std::find_if(out.entries.begin(), out.entries.end(),
                             [&](const FlowEntry& e) { return e.entry_id == del->entry_id; }));
        } else {
            const auto& mod = std::get<OpModify>(op);
            auto it = std::find_if(out.entries.begin(), out.entries.end(),
                                   [&](const FlowEntry& e) { return e.entry_id == mod.entry.entry_id; });
            FlowCounters keep = it->counters;
            *it = mod.entry;
            if (it->actions.empty()) it->actions.push_back(ActionDrop{});
            it->counters = keep;
        }
    }
    return out;
}

void encode_update(ByteWriter& w, const FlowRuleUpdatePayload& u) {
    w.u64(u.switch_id);
    w.u32(u.base_version);
    w.u32(static_cast<std::uint32_t>(u.ops.size()));
    for (const auto& op : u.ops) {
        if (const auto* add = std::get_if<OpAdd>(&op)) {
            w.u8(0);
            encode_entry(w, add->entry);
        } else if (const auto* del = std::get_if<OpDelete>(&op)) {
            w.u8(1);
            w.u64(del->entry_id);
        } else {
            w.u8(2);
            encode_entry(w, std::get<OpModify>(op).entry);
        }
    }
}

FlowRuleUpdatePayload decode_update(ByteReader& r) {
    FlowRuleUpdatePayload u;
    u.switch_id = r.u64();
    u.base_version = r.u32();
    std::uint32_t n = r.u32();
    for (std::uint32_t i = 0; i < n; ++i) {
        switch (r.u8()) {
            case 0:
                u.ops.push_back(OpAdd{decode_entry(r)});
                break;
            case 1:
                u.ops.push_back(OpDelete{r.u64()});
                break;
            case 2:
                u.ops.push_back(OpModify{decode_entry(r)});
                break;
            default:
                throw DecodeError("bad update op tag");
        }
    }
    return u;
}

namespace {

std::string ip_to_string(std::uint32_t ip) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%u.%u.%u.%u", (ip >> 24) & 0xff, (ip >> 16) & 0xff,
                  (ip >> 8) & 0xff, ip & 0xff);
    return buf;
}

std::uint32_t parse_ip(const std::string& s) {
    unsigned a, b, c, d;
    if (std::sscanf(s.c_str(), "%u.%u.%u.%u", &a, &b, &c, &d) != 4 || a > 255 || b > 255 ||
        c > 255 || d > 255)
        throw std::invalid_argument("bad ip: " + s);
    return (a << 24) | (b << 16) | (c << 8) | d;
}

std::string mac_to_string(std::uint64_t m) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%02x:%02x:%02x:%02x:%02x:%02x",
                  unsigned((m >> 40) & 0xff), unsigned((m >> 32) & 0xff),
                  unsigned((m >> 24) & 0xff), unsigned((m >> 16) & 0xff),
                  unsigned((m >> 8) & 0xff), unsigned(m & 0xff));
    return buf;
}

std::uint64_t parse_mac(const std::string& s) {
    unsigned b[6];
    if (std::sscanf(s.c_str(), "%x:%x:%x:%x:%x:%x", &b[0], &b[1], &b[2], &b[3], &b[4], &b[5]) != 6)
        throw std::invalid_argument("bad mac: " + s);
    std::uint64_t m = 0;
    for (int i = 0; i < 6; ++i) {
        if (b[i] > 255) throw std::invalid_argument("bad mac: " + s);
        m = (m << 8) | b[i];
    }
    return m;
}

std::string prefix_to_string(const IpPrefix& p) {
    return ip_to_string(p.addr) + "/" + std::to_string(p.prefix_len);
}

IpPrefix parse_prefix(const std::string& s) {
    IpPrefix p;
    auto slash = s.find('/');
    if (slash == std::string::npos) {
        p.addr = parse_ip(s);
        p.prefix_len = 32;
    } else {
        p.addr = parse_ip(s.substr(0, slash));
        int len = std::stoi(s.substr(slash + 1));
        if (len < 0 || len > 32) throw std::invalid_argument("bad prefix length: " + s);
        p.prefix_len = static_cast<std::uint8_t>(len);
    }
    return p;
}

}  // namespace

std::string format_entry(const FlowEntry& e) {
    std::ostringstream out;
    out << "priority=" << e.priority << " match=";
    std::vector<std::string> kv;
    const auto& m = e.match;
    if (m.in_port) kv.push_back("in_port=" + std::to_string(*m.in_port));
    if (m.eth_src) kv.push_back("eth_src=" + mac_to_string(*m.eth_src));
    if (m.eth_dst) kv.push_back("eth_dst=" + mac_to_string(*m.eth_dst));
    if (m.ip_src) kv.push_back("ip_src=" + prefix_to_string(*m.ip_src));
    if (m.ip_dst) kv.push_back("ip_dst=" + prefix_to_string(*m.ip_dst));
    if (m.ip_proto) kv.push_back("ip_proto=" + std::to_string(*m.ip_proto));
    if (m.l4_src) kv.push_back("l4_src=" + std::to_string(*m.l4_src));
    if (m.l4_dst) kv.push_back("l4_dst=" + std::to_string(*m.l4_dst));
    if (kv.empty()) {
        out << "any";
    } else {
        for (std::size_t i = 0; i < kv.size(); ++i) out << (i ? "," : "") << kv[i];
    }
    out << " actions=";
    for (std::size_t i = 0; i < e.actions.size(); ++i) {
        if (i) out << ";";
        const auto& a = e.actions[i];
        if (const auto* f = std::get_if<ActionForward>(&a))
            out << "forward(" << f->port << ")";
        else if (std::holds_alternative<ActionDrop>(a))
            out << "drop";
        else
            out << "to_controller";
    }
    return out.str();
}

FlowEntry parse_entry(const std::string& line, std::uint64_t entry_id) {
    auto get_field = [&](const std::string& key) -> std::string {
        auto pos = line.find(key + "=");
        if (pos == std::string::npos)
            throw std::invalid_argument("flow entry missing '" + key + "=': " + line);
        pos += key.size() + 1;
        auto end = line.find(' ', pos);
        return line.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
    };

    FlowEntry e;
    e.entry_id = entry_id;
    int prio = std::stoi(get_field("priority"));
    if (prio < 0 || prio > 65535) throw std::invalid_argument("priority out of range: " + line);
    e.priority = static_cast<std::uint16_t>(prio);

    std::string matches = get_field("match");
    if (matches != "any" && !matches.empty()) {
        std::stringstream ss(matches);
        std::string item;
        while (std::getline(ss, item, ',')) {
            auto eq = item.find('=');
            if (eq == std::string::npos)
                throw std::invalid_argument("bad match item '" + item + "' in: " + line);
            std::string k = item.substr(0, eq), v = item.substr(eq + 1);
            if (k == "in_port")
                e.match.in_port = static_cast<std::uint16_t>(std::stoul(v));
            else if (k == "eth_src")
                e.match.eth_src = parse_mac(v);
            else if (k == "eth_dst")
                e.match.eth_dst = parse_mac(v);
            else if (k == "ip_src")
                e.match.ip_src = parse_prefix(v);
            else if (k == "ip_dst")
                e.match.ip_dst = parse_prefix(v);
            else if (k == "ip_proto")
                e.match.ip_proto = static_cast<std::uint8_t>(std::stoul(v));
            else if (k == "l4_src")
                e.match.l4_src = static_cast<std::uint16_t>(std::stoul(v));
            else if (k == "l4_dst")
                e.match.l4_dst = static_cast<std::uint16_t>(std::stoul(v));
            else
                throw std::invalid_argument("unknown match key '" + k + "' in: " + line);
        }
    }

    std::string acts = get_field("actions");
    std::stringstream ss(acts);
    std::string item;
    while (std::getline(ss, item, ';')) {
        if (item == "drop")
            e.actions.push_back(ActionDrop{});
        else if (item == "to_controller")
            e.actions.push_back(ActionToController{});
        else if (item.rfind("forward(", 0) == 0 && item.back() == ')')
            e.actions.push_back(
                ActionForward{static_cast<std::uint16_t>(std::stoul(item.substr(8, item.size() - 9)))});
        else
            throw std::invalid_argument("unknown action '" + item + "' in: " + line);
    }
    if (e.actions.empty()) e.actions.push_back(ActionDrop{});
    return e;
}

}  // namespace bsdn::flowtable
