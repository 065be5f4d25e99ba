#include "eeasim/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"

#include "eeasim/error.hpp"

namespace eea {

using nlohmann::json;

std::string_view to_string(NodeKind kind) noexcept {
    switch (kind) {
        case NodeKind::classic: return "classic";
        case NodeKind::adaptive: return "adaptive";
        case NodeKind::gateway: return "gateway";
    }
    return "?";
}

std::string_view action_name(const Action& action) noexcept {
    static constexpr std::string_view names[] = {"write_signal", "publish_event", "call_method", "set_field",
                                                 "update_app",   "stop_app",      "start_app"};
    return names[action.index()];
}

const NodeConfig* ScenarioConfig::find_node(std::string_view id) const {
    for (const auto& n : nodes) {
        if (n.id == id) return &n;
    }
    return nullptr;
}

const FrameConfig* ScenarioConfig::find_frame(std::uint32_t frame_id) const {
    for (const auto& f : frames) {
        if (f.def.frame_id == frame_id) return &f;
    }
    return nullptr;
}

const FrameConfig* ScenarioConfig::find_frame(const std::string& bus, std::uint32_t frame_id) const {
    for (const auto& f : frames) {
        if (f.bus == bus && f.def.frame_id == frame_id) return &f;
    }
    return nullptr;
}

const ServiceConfig* ScenarioConfig::find_service(std::uint16_t service_id) const {
    for (const auto& s : services) {
        if (s.interface->service_id == service_id) return &s;
    }
    return nullptr;
}

// ---------------------------------------------------------------------------
// Structural parsing. Type errors are reported with a path and abort.

namespace {

class Reader {
public:
    Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {}

    const std::string& path() const { return path_; }
    const json& raw() const { return j_; }

    [[noreturn]] void error(const std::string& what) const { fail(Errc::parse_error, path_ + ": " + what); }

    bool has(const char* key) const { return j_.is_object() && j_.contains(key) && !j_.at(key).is_null(); }

    Reader at(const char* key) const {
        if (!j_.is_object()) error("expected an object");
        if (!j_.contains(key)) error(std::string("missing member '") + key + "'");
        return {j_.at(key), path_ + "." + key};
    }

    std::vector<Reader> items(const char* key) const {
        std::vector<Reader> out;
        if (!has(key)) return out;
        const auto& arr = j_.at(key);
        if (!arr.is_array()) Reader(arr, path_ + "." + key).error("expected an array");
        for (std::size_t i = 0; i < arr.size(); ++i) {
            out.emplace_back(arr[i], path_ + "." + key + "[" + std::to_string(i) + "]");
        }
        return out;
    }

    std::string str() const {
        if (!j_.is_string()) error("expected a string");
        return j_.get<std::string>();
    }

    std::string str(const char* key) const { return at(key).str(); }
    std::string str(const char* key, const std::string& fallback) const { return has(key) ? str(key) : fallback; }

    // Integer given as a JSON number or a "0x..." / decimal string.
    std::uint64_t uint(std::uint64_t max) const {
        std::uint64_t v = 0;
        if (j_.is_number_unsigned()) {
            v = j_.get<std::uint64_t>();
        } else if (j_.is_number_integer()) {
            if (j_.get<std::int64_t>() < 0) error("expected a non-negative integer");
            v = static_cast<std::uint64_t>(j_.get<std::int64_t>());
        } else if (j_.is_string()) {
            const auto s = j_.get<std::string>();
            std::size_t used = 0;
            try {
                v = std::stoull(s, &used, 0);
            } catch (const std::exception&) {
                error("expected an integer, got '" + s + "'");
            }
            if (used != s.size() || (!s.empty() && s[0] == '-')) error("expected an integer, got '" + s + "'");
        } else {
            error("expected an integer");
        }
        if (v > max) error("value " + std::to_string(v) + " exceeds " + std::to_string(max));
        return v;
    }

    std::uint64_t uint(const char* key, std::uint64_t max) const { return at(key).uint(max); }
    std::uint64_t uint(const char* key, std::uint64_t max, std::uint64_t fallback) const {
        return has(key) ? uint(key, max) : fallback;
    }

    double number() const {
        if (!j_.is_number()) error("expected a number");
        return j_.get<double>();
    }

    double number(const char* key) const { return at(key).number(); }
    double number(const char* key, double fallback) const { return has(key) ? number(key) : fallback; }

    bool boolean(const char* key, bool fallback) const {
        if (!has(key)) return fallback;
        const auto& v = j_.at(key);
        if (!v.is_boolean()) Reader(v, path_ + "." + key).error("expected true or false");
        return v.get<bool>();
    }

    std::vector<std::string> strings(const char* key) const {
        std::vector<std::string> out;
        for (const auto& r : items(key)) out.push_back(r.str());
        return out;
    }

    Values values(const char* key) const {
        Values out;
        if (!has(key)) return out;
        const auto r = at(key);
        if (!r.j_.is_object()) r.error("expected an object of name -> number");
        for (const auto& [name, v] : r.j_.items()) out.emplace(name, Reader(v, r.path_ + "." + name).number());
        return out;
    }

private:
    const json& j_;
    std::string path_;
};

std::uint16_t u16(const Reader& r, const char* key) { return static_cast<std::uint16_t>(r.uint(key, 0xFFFF)); }

PayloadSchema parse_schema(const Reader& r, const char* key) {
    PayloadSchema schema;
    for (const auto& e : r.items(key)) {
        SchemaElement el;
        el.name = e.str("name");
        const auto type = e.str("type");
        const auto p = parse_primitive(type);
        if (!p) e.at("type").error("unknown primitive '" + type + "'");
        el.type = *p;
        schema.elements.push_back(std::move(el));
    }
    return schema;
}

SignalDef parse_signal(const Reader& r) {
    SignalDef s;
    s.name = r.str("name");
    s.start_bit = static_cast<std::uint32_t>(r.uint("start_bit", 0xFFFFFFFF));
    s.bit_length = static_cast<std::uint32_t>(r.uint("bit_length", 0xFFFFFFFF));
    const auto order = r.str("byte_order", "little_endian");
    if (order == "little_endian" || order == "intel") {
        s.byte_order = ByteOrder::little_endian;
    } else if (order == "big_endian" || order == "motorola") {
        s.byte_order = ByteOrder::big_endian;
    } else {
        r.at("byte_order").error("expected little_endian or big_endian");
    }
    const auto kind = r.str("value_kind", "unsigned");
    if (kind == "unsigned") {
        s.value_kind = ValueKind::unsigned_int;
    } else if (kind == "signed") {
        s.value_kind = ValueKind::signed_int;
    } else {
        r.at("value_kind").error("expected unsigned or signed");
    }
    s.scale = r.number("scale", 1.0);
    s.offset = r.number("offset", 0.0);
    return s;
}

FrameConfig parse_frame(const Reader& r) {
    FrameConfig f;
    f.bus = r.str("bus");
    f.def.frame_id = static_cast<std::uint32_t>(r.uint("frame_id", 0xFFFFFFFF));
    f.def.payload_length = r.uint("payload_length", 0xFFFF, 8);
    if (r.has("cycle_time")) f.def.cycle_time = r.uint("cycle_time", 0xFFFFFFFF);
    for (const auto& s : r.items("signals")) f.def.signals.push_back(parse_signal(s));
    return f;
}

ServiceConfig parse_service(const Reader& r) {
    auto iface = std::make_shared<ServiceInterfaceDef>();
    ServiceConfig cfg;
    iface->name = r.str("name", "");
    iface->service_id = u16(r, "service_id");
    iface->interface_version = static_cast<std::uint8_t>(r.uint("interface_version", 0xFF, 1));
    for (const auto& e : r.items("events")) {
        iface->events.push_back({u16(e, "event_id"), e.str("name", ""), parse_schema(e, "schema")});
    }
    for (const auto& m : r.items("methods")) {
        MethodDef def{u16(m, "method_id"), m.str("name", ""), parse_schema(m, "request"), parse_schema(m, "response")};
        if (m.has("reply")) {
            const auto reply = m.at("reply");
            MethodReply mr;
            if (reply.raw().is_string()) {
                if (reply.str() != "echo") reply.error("expected \"echo\" or {\"error\": code}");
            } else {
                mr.error_code = static_cast<std::uint8_t>(reply.uint("error", 0xFF));
            }
            cfg.replies[def.id] = mr;
        }
        iface->methods.push_back(std::move(def));
    }
    for (const auto& f : r.items("fields")) {
        FieldDef def;
        def.id = u16(f, "field_id");
        def.name = f.str("name", "");
        def.schema = parse_schema(f, "schema");
        def.has_getter = f.boolean("getter", false);
        def.has_setter = f.boolean("setter", false);
        def.has_notifier = f.boolean("notifier", false);
        if (f.has("initial")) cfg.field_initial[def.id] = f.values("initial");
        iface->fields.push_back(std::move(def));
    }
    cfg.interface = std::move(iface);
    return cfg;
}

AppManifest parse_manifest(const Reader& r) {
    AppManifest m;
    m.app_name = r.str("name");
    const auto version = r.str("version", "1.0.0");
    const auto v = parse_version(version);
    if (!v) r.at("version").error("expected major.minor.patch, got '" + version + "'");
    m.version = *v;
    for (const auto& p : r.items("provides")) m.provides.push_back({u16(p, "service_id"), u16(p, "instance_id")});
    for (const auto& s : r.items("requires")) m.requires_services.push_back(static_cast<std::uint16_t>(s.uint(0xFFFF)));
    m.startup_dependencies = r.strings("depends_on");
    return m;
}

MappingRule parse_rule(const Reader& r) {
    MappingRule rule;
    const auto src = r.at("source");
    rule.source.bus = src.str("bus", "");
    rule.source.frame_id = static_cast<std::uint32_t>(src.uint("frame_id", 0xFFFFFFFF));
    rule.source.signal = src.str("signal", "");
    const auto tgt = r.at("target");
    if (tgt.has("endpoint")) {
        const auto ep = tgt.at("endpoint");
        rule.target = UdpTarget{Endpoint{ep.str("node"), u16(ep, "port")}};
    } else {
        ServiceTarget t;
        t.service_id = u16(tgt, "service_id");
        t.instance_id = u16(tgt, "instance_id");
        if (tgt.has("event_id") == tgt.has("field_id")) tgt.error("name exactly one of event_id or field_id");
        if (tgt.has("event_id")) {
            t.kind = TargetKind::event;
            t.element_id = u16(tgt, "event_id");
        } else {
            t.kind = TargetKind::field;
            t.element_id = u16(tgt, "field_id");
        }
        rule.target = t;
    }
    if (r.has("transform")) {
        const auto tr = r.at("transform");
        rule.transform = Affine{tr.number("a", 1.0), tr.number("b", 0.0)};
    }
    const auto dir = r.str("direction", "bus_to_service");
    if (dir == "bus_to_service") {
        rule.direction = RuleDirection::bus_to_service;
    } else if (dir == "service_to_bus") {
        rule.direction = RuleDirection::service_to_bus;
    } else {
        r.at("direction").error("expected bus_to_service or service_to_bus");
    }
    return rule;
}

NodeConfig parse_node(const Reader& r) {
    NodeConfig n;
    n.id = r.str("id");
    const auto kind = r.str("kind");
    if (kind == "classic") {
        n.kind = NodeKind::classic;
    } else if (kind == "adaptive") {
        n.kind = NodeKind::adaptive;
    } else if (kind == "gateway") {
        n.kind = NodeKind::gateway;
    } else {
        r.at("kind").error("expected classic, adaptive or gateway");
    }
    n.buses = r.strings("buses");
    n.port = static_cast<std::uint16_t>(r.uint("port", 0xFFFF, kDefaultServicePort));
    for (const auto& t : r.items("transmits")) n.transmits.push_back(static_cast<std::uint32_t>(t.uint(0xFFFFFFFF)));
    n.functions = r.strings("functions");
    for (const auto& m : r.items("apps")) n.manifests.push_back(parse_manifest(m));
    for (const auto& s : r.items("subscriptions")) {
        n.subscriptions.push_back({u16(s, "service_id"), u16(s, "instance_id"), u16(s, "event_id")});
    }
    if (r.has("adapter")) {
        const auto a = r.at("adapter");
        AdapterConfig cfg;
        cfg.port = u16(a, "port");
        for (const auto& f : a.items("frames")) {
            cfg.frames.push_back({f.str("bus"), static_cast<std::uint32_t>(f.uint("frame_id", 0xFFFFFFFF))});
        }
        for (const auto& rule : a.items("rules")) cfg.rules.push_back(parse_rule(rule));
        n.adapter = std::move(cfg);
    }
    n.restart_dependents = r.boolean("restart_dependents", false);
    if (r.has("mapping")) {
        const auto m = r.at("mapping");
        GatewayMapping mapping;
        const auto mode = m.str("mode");
        if (mode == "service" || mode == "service_gateway") {
            mapping.mode = GatewayMode::service_gateway;
        } else if (mode == "signal" || mode == "signal_gateway") {
            mapping.mode = GatewayMode::signal_gateway;
        } else {
            m.at("mode").error("expected service or signal");
        }
        for (const auto& rule : m.items("rules")) mapping.rules.push_back(parse_rule(rule));
        n.mapping = std::move(mapping);
    }
    return n;
}

Stimulus parse_stimulus(const Reader& r) {
    Stimulus s;
    s.tick = r.uint("tick", 0xFFFFFFFFFFFF);
    s.node = r.str("node");
    const auto action = r.str("action");
    if (action == "write_signal") {
        s.action = WriteSignal{static_cast<std::uint32_t>(r.uint("frame_id", 0xFFFFFFFF)), r.str("signal"),
                               r.number("value")};
    } else if (action == "publish_event") {
        s.action = PublishEvent{u16(r, "service_id"), u16(r, "instance_id"), u16(r, "event_id"), r.values("values")};
    } else if (action == "call_method") {
        s.action = CallMethod{u16(r, "service_id"), u16(r, "instance_id"), u16(r, "method_id"), r.values("values")};
    } else if (action == "set_field") {
        s.action = SetField{u16(r, "service_id"), u16(r, "instance_id"), u16(r, "field_id"), r.values("values")};
    } else if (action == "update_app") {
        s.action = UpdateApp{parse_manifest(r.at("manifest"))};
    } else if (action == "stop_app") {
        s.action = StopApp{r.str("app")};
    } else if (action == "start_app") {
        s.action = StartApp{r.str("app")};
    } else {
        r.at("action").error("unknown action '" + action + "'");
    }
    return s;
}

RandomWrites parse_random(const Reader& r) {
    const auto action = r.str("action", "write_signal");
    if (action != "write_signal") r.at("action").error("only write_signal stimuli can be generated");
    RandomWrites g;
    g.node = r.str("node");
    g.frame_id = static_cast<std::uint32_t>(r.uint("frame_id", 0xFFFFFFFF));
    g.signal = r.str("signal");
    g.count = r.uint("count", 1'000'000);
    g.start_tick = r.uint("start_tick", 0xFFFFFFFFFFFF, 0);
    g.min_gap = r.uint("min_gap", 0xFFFFFFFF, 1);
    g.max_gap = r.uint("max_gap", 0xFFFFFFFF, g.min_gap);
    g.min = r.number("min");
    g.max = r.number("max");
    g.step = r.number("step", 1.0);
    return g;
}

ScenarioConfig parse_config(const json& doc) {
    const Reader root(doc, "$");
    if (!doc.is_object()) root.error("scenario must be a JSON object");
    ScenarioConfig c;
    c.name = root.str("name", "");
    c.duration = root.uint("duration", 0xFFFFFFFFFFFF);
    c.seed = root.uint("seed", ~std::uint64_t{0}, 0);
    c.method_timeout = root.uint("method_timeout", 0xFFFFFFFF, kDefaultMethodTimeout);
    for (const auto& b : root.items("buses")) c.buses.push_back({b.str("name")});
    for (const auto& f : root.items("frames")) c.frames.push_back(parse_frame(f));
    for (const auto& s : root.items("services")) c.services.push_back(parse_service(s));
    for (const auto& n : root.items("nodes")) c.nodes.push_back(parse_node(n));
    for (const auto& s : root.items("stimuli")) c.stimuli.push_back(parse_stimulus(s));
    for (const auto& g : root.items("random_stimuli")) c.random_writes.push_back(parse_random(g));
    return c;
}

// ---------------------------------------------------------------------------
// Semantic validation. Everything is collected, nothing aborts.

class Validator {
public:
    Validator(const ScenarioConfig& c, std::vector<std::string>& errors, std::vector<std::string>* warnings)
        : c_(c), errors_(errors), warnings_(warnings) {}

    void run() {
        if (c_.duration < 1) error("duration must be at least 1 tick");
        check_buses();
        check_frames();
        check_services();
        check_nodes();
        check_stimuli();
        check_generators();
    }

private:
    void error(const std::string& msg) { errors_.push_back(msg); }
    void warn(const std::string& msg) {
        if (warnings_ != nullptr) warnings_->push_back(msg);
    }

    static std::string hex(std::uint32_t v) {
        std::ostringstream os;
        os << "0x" << std::hex << v;
        return os.str();
    }

    bool bus_exists(const std::string& name) const {
        return std::any_of(c_.buses.begin(), c_.buses.end(), [&](const BusConfig& b) { return b.name == name; });
    }

    void check_buses() {
        std::set<std::string> seen;
        for (const auto& b : c_.buses) {
            if (b.name.empty()) error("bus with an empty name");
            if (!seen.insert(b.name).second) error("duplicate bus '" + b.name + "'");
        }
    }

    void check_frames() {
        std::set<std::uint32_t> seen;
        for (const auto& f : c_.frames) {
            const auto where = "frame " + hex(f.def.frame_id);
            if (!bus_exists(f.bus)) error(where + ": unknown bus '" + f.bus + "'");
            if (!seen.insert(f.def.frame_id).second) error(where + ": frame id defined more than once");
            if (f.def.cycle_time && *f.def.cycle_time == 0) error(where + ": cycle_time must be positive");
            try {
                f.def.validate();
            } catch (const Error& e) {
                error(where + ": " + e.what());
            }
        }
    }

    void check_values(const std::string& where, const PayloadSchema& schema, const Values& values) {
        try {
            (void)schema.serialize(values);
        } catch (const Error& e) {
            error(where + ": " + e.what());
        }
    }

    void check_services() {
        std::set<std::uint16_t> seen;
        for (const auto& s : c_.services) {
            const auto& iface = *s.interface;
            const auto where = "service " + hex(iface.service_id);
            if (!seen.insert(iface.service_id).second) error(where + ": service id defined more than once");
            try {
                iface.validate();
            } catch (const Error& e) {
                error(where + ": " + e.what());
            }
            for (const auto& [field_id, values] : s.field_initial) {
                if (const auto* f = iface.find_field(field_id)) {
                    check_values(where + " field '" + f->name + "' initial value", f->schema, values);
                }
            }
        }
    }

    const ServiceConfig* service(const std::string& where, std::uint16_t id) {
        const auto* s = c_.find_service(id);
        if (s == nullptr) error(where + ": unknown service " + hex(id));
        return s;
    }

    // Schema of the element a mapping rule writes into, checked for the
    // single-element rule.
    void check_service_target(const std::string& where, const ServiceTarget& t) {
        const auto* s = service(where, t.service_id);
        if (s == nullptr) return;
        const PayloadSchema* schema = nullptr;
        if (t.kind == TargetKind::event) {
            if (const auto* e = s->interface->find_event(t.element_id)) schema = &e->schema;
            if (schema == nullptr) error(where + ": service " + hex(t.service_id) + " has no event " + hex(t.element_id));
        } else {
            if (const auto* f = s->interface->find_field(t.element_id)) schema = &f->schema;
            if (schema == nullptr) error(where + ": service " + hex(t.service_id) + " has no field " + hex(t.element_id));
        }
        if (schema != nullptr && schema->elements.size() != 1) {
            error(where + ": target record must have exactly one element");
        }
    }

    void check_signal_source(const std::string& where, const FrameConfig* frame, const std::string& signal) {
        if (frame != nullptr && frame->def.find_signal(signal) == nullptr) {
            error(where + ": frame " + hex(frame->def.frame_id) + " has no signal '" + signal + "'");
        }
    }

    std::set<std::pair<std::uint16_t, std::uint16_t>> hosted_by(const NodeConfig& n) const {
        std::set<std::pair<std::uint16_t, std::uint16_t>> out;
        for (const auto& m : n.manifests) {
            for (const auto& p : m.provides) out.insert({p.service_id, p.instance_id});
        }
        if (n.mapping && n.mapping->mode == GatewayMode::service_gateway) {
            for (const auto& rule : n.mapping->rules) {
                const auto* t = rule.service_target();
                if (t == nullptr) continue;
                if (rule.direction == RuleDirection::bus_to_service || t->kind == TargetKind::field) {
                    out.insert({t->service_id, t->instance_id});
                }
            }
        }
        return out;
    }

    void check_nodes() {
        std::set<std::string> seen;
        std::map<std::pair<std::uint16_t, std::uint16_t>, std::string> hosts;
        for (const auto& n : c_.nodes) {
            const auto where = "node '" + n.id + "'";
            if (n.id.empty()) error("node with an empty id");
            if (!seen.insert(n.id).second) error(where + ": duplicate node id");
            for (const auto& b : n.buses) {
                if (!bus_exists(b)) error(where + ": unknown bus '" + b + "'");
            }
            for (const auto& key : hosted_by(n)) {
                auto [it, inserted] = hosts.emplace(key, n.id);
                if (!inserted && it->second != n.id) {
                    error(where + ": service " + hex(key.first) + " instance " + hex(key.second) +
                          " is already hosted by node '" + it->second + "'");
                }
            }
            switch (n.kind) {
                case NodeKind::classic: check_classic(n, where); break;
                case NodeKind::adaptive: check_adaptive(n, where); break;
                case NodeKind::gateway: check_gateway(n, where); break;
            }
        }
    }

    void check_classic(const NodeConfig& n, const std::string& where) {
        if (!n.manifests.empty() || n.mapping || n.adapter || !n.subscriptions.empty()) {
            error(where + ": classic nodes take only buses, transmits and functions");
        }
        for (auto id : n.transmits) {
            const auto* f = c_.find_frame(id);
            if (f == nullptr) {
                error(where + ": transmits unknown frame " + hex(id));
            } else if (std::find(n.buses.begin(), n.buses.end(), f->bus) == n.buses.end()) {
                error(where + ": transmits frame " + hex(id) + " on bus '" + f->bus + "' it is not attached to");
            }
        }
    }

    void check_manifest(const std::string& where, const AppManifest& m) {
        if (m.app_name.empty()) error(where + ": application without a name");
        for (const auto& p : m.provides) service(where + " app '" + m.app_name + "'", p.service_id);
        for (auto s : m.requires_services) service(where + " app '" + m.app_name + "' requires", s);
    }

    void check_subscriptions(const NodeConfig& n, const std::string& where) {
        for (const auto& s : n.subscriptions) {
            const auto* svc = service(where + " subscription", s.service_id);
            if (svc != nullptr && svc->interface->notification_schema(s.event_id) == nullptr) {
                error(where + ": service " + hex(s.service_id) + " has no event " + hex(s.event_id));
            }
        }
    }

    void check_adaptive(const NodeConfig& n, const std::string& where) {
        if (n.mapping) error(where + ": only gateway nodes carry a mapping");
        const auto report = analyze_manifests(n.manifests);
        for (const auto& d : report.duplicates) error(where + ": duplicate application '" + d + "'");
        for (const auto& u : report.unknown_dependencies) error(where + ": unresolved dependency " + u);
        for (const auto& cycle : report.cycles) {
            std::string members;
            for (const auto& m : cycle) members += (members.empty() ? "" : ", ") + m;
            error(where + ": startup dependency cycle among {" + members + "}");
        }
        std::set<std::pair<std::uint16_t, std::uint16_t>> provided;
        for (const auto& m : n.manifests) {
            check_manifest(where, m);
            for (const auto& p : m.provides) {
                if (!provided.insert({p.service_id, p.instance_id}).second) {
                    error(where + ": service " + hex(p.service_id) + " instance " + hex(p.instance_id) +
                          " provided by two applications");
                }
            }
        }
        std::set<std::uint16_t> services_here;
        for (const auto& p : provided) {
            if (!services_here.insert(p.first).second) {
                error(where + ": one endpoint can host a single instance of service " + hex(p.first));
            }
        }
        check_subscriptions(n, where);
        if (!n.adapter) return;
        const auto& a = *n.adapter;
        const auto aw = where + " adapter";
        if (a.port == n.port) error(aw + ": port collides with the node's service port");
        std::set<std::uint32_t> ids;
        for (const auto& key : a.frames) {
            if (c_.find_frame(key.bus, key.frame_id) == nullptr) {
                error(aw + ": unknown frame " + hex(key.frame_id) + " on bus '" + key.bus + "'");
            }
            if (!ids.insert(key.frame_id).second) error(aw + ": frame id " + hex(key.frame_id) + " listed twice");
        }
        for (std::size_t i = 0; i < a.rules.size(); ++i) {
            const auto& rule = a.rules[i];
            const auto rw = aw + " rule " + std::to_string(i);
            const auto* t = rule.service_target();
            if (t == nullptr || rule.direction != RuleDirection::bus_to_service) {
                error(rw + ": adapter rules map frames onto services");
                continue;
            }
            if (!ids.contains(rule.source.frame_id)) {
                error(rw + ": frame " + hex(rule.source.frame_id) + " is not one of the adapter's frames");
            } else {
                check_signal_source(rw, c_.find_frame(rule.source.frame_id), rule.source.signal);
            }
            check_service_target(rw, *t);
            if (!provided.contains({t->service_id, t->instance_id})) {
                error(rw + ": target service " + hex(t->service_id) + " is not provided by an app on this node");
            }
        }
    }

    void check_gateway(const NodeConfig& n, const std::string& where) {
        if (!n.manifests.empty() || n.adapter) error(where + ": gateway nodes take a mapping, not apps or adapters");
        if (!n.mapping) {
            error(where + ": gateway node without a mapping");
            return;
        }
        try {
            n.mapping->validate();
        } catch (const Error& e) {
            error(where + ": " + e.what());
        }
        check_subscriptions(n, where);
        for (std::size_t i = 0; i < n.mapping->rules.size(); ++i) {
            const auto& rule = n.mapping->rules[i];
            const auto rw = where + " rule " + std::to_string(i);
            if (std::find(n.buses.begin(), n.buses.end(), rule.source.bus) == n.buses.end()) {
                error(rw + ": gateway is not attached to bus '" + rule.source.bus + "'");
            }
            const auto* frame = c_.find_frame(rule.source.bus, rule.source.frame_id);
            if (frame == nullptr) {
                error(rw + ": unknown frame " + hex(rule.source.frame_id) + " on bus '" + rule.source.bus + "'");
            }
            if (const auto* t = rule.service_target()) {
                check_signal_source(rw, frame, rule.source.signal);
                check_service_target(rw, *t);
            } else if (const auto* u = rule.udp_target()) {
                const auto* dst = c_.find_node(u->destination.node);
                if (dst == nullptr) {
                    error(rw + ": unknown destination node '" + u->destination.node + "'");
                } else if (!dst->adapter || dst->adapter->port != u->destination.port) {
                    error(rw + ": no UDP adapter listens on " + u->destination.to_string());
                } else if (frame != nullptr &&
                           std::none_of(dst->adapter->frames.begin(), dst->adapter->frames.end(),
                                        [&](const FrameKey& k) { return k.frame_id == rule.source.frame_id; })) {
                    warn(rw + ": adapter on " + u->destination.to_string() + " does not decode frame " +
                         hex(rule.source.frame_id));
                }
            }
        }
    }

    void check_stimuli() {
        std::map<std::string, std::set<std::string>> apps;
        for (const auto& n : c_.nodes) {
            for (const auto& m : n.manifests) apps[n.id].insert(m.app_name);
        }
        for (const auto& s : c_.stimuli) {
            if (const auto* u = std::get_if<UpdateApp>(&s.action)) apps[s.node].insert(u->manifest.app_name);
        }

        for (std::size_t i = 0; i < c_.stimuli.size(); ++i) {
            const auto& s = c_.stimuli[i];
            const auto where = "stimulus " + std::to_string(i) + " (" + std::string(action_name(s.action)) + ")";
            if (s.tick >= c_.duration) warn(where + ": tick " + std::to_string(s.tick) + " is past the run duration");
            const auto* node = c_.find_node(s.node);
            if (node == nullptr) {
                error(where + ": unknown node '" + s.node + "'");
                continue;
            }
            std::visit([&](const auto& a) { check_action(where, *node, apps[node->id], a); }, s.action);
        }
    }

    void require_kind(const std::string& where, const NodeConfig& n, std::initializer_list<NodeKind> kinds) {
        if (std::find(kinds.begin(), kinds.end(), n.kind) == kinds.end()) {
            error(where + ": not applicable to " + std::string(to_string(n.kind)) + " node '" + n.id + "'");
        }
    }

    void check_write(const std::string& where, const NodeConfig& n, std::uint32_t frame_id, const std::string& signal,
                     std::initializer_list<double> values) {
        require_kind(where, n, {NodeKind::classic});
        if (std::find(n.transmits.begin(), n.transmits.end(), frame_id) == n.transmits.end()) {
            error(where + ": node '" + n.id + "' does not transmit frame " + hex(frame_id));
        }
        const auto* f = c_.find_frame(frame_id);
        if (f == nullptr) return;
        const auto* sig = f->def.find_signal(signal);
        if (sig == nullptr) {
            error(where + ": frame " + hex(frame_id) + " has no signal '" + signal + "'");
            return;
        }
        for (double v : values) {
            try {
                Bytes scratch(std::max<std::size_t>(f->def.payload_length, sig->required_bytes()), 0);
                (void)pack_signal(scratch, *sig, v);
            } catch (const Error& e) {
                error(where + ": " + e.what());
            }
        }
    }

    void check_action(const std::string& where, const NodeConfig& n, const std::set<std::string>&,
                      const WriteSignal& a) {
        check_write(where, n, a.frame_id, a.signal, {a.value});
    }

    void check_action(const std::string& where, const NodeConfig& n, const std::set<std::string>&,
                      const PublishEvent& a) {
        require_kind(where, n, {NodeKind::adaptive, NodeKind::gateway});
        const auto* s = service(where, a.service_id);
        if (s == nullptr) return;
        const auto* e = s->interface->find_event(a.event_id);
        if (e == nullptr) {
            error(where + ": service " + hex(a.service_id) + " has no event " + hex(a.event_id));
            return;
        }
        check_values(where, e->schema, a.values);
        if (!hosted_by(n).contains({a.service_id, a.instance_id})) {
            error(where + ": node '" + n.id + "' does not host service " + hex(a.service_id) + " instance " +
                  hex(a.instance_id));
        }
    }

    void check_action(const std::string& where, const NodeConfig& n, const std::set<std::string>&,
                      const CallMethod& a) {
        require_kind(where, n, {NodeKind::adaptive});
        const auto* s = service(where, a.service_id);
        if (s == nullptr) return;
        const auto* m = s->interface->find_method(a.method_id);
        if (m == nullptr) {
            error(where + ": service " + hex(a.service_id) + " has no method " + hex(a.method_id));
            return;
        }
        check_values(where, m->request, a.values);
    }

    void check_action(const std::string& where, const NodeConfig& n, const std::set<std::string>&, const SetField& a) {
        require_kind(where, n, {NodeKind::adaptive, NodeKind::gateway});
        const auto* s = service(where, a.service_id);
        if (s == nullptr) return;
        const auto* f = s->interface->find_field(a.field_id);
        if (f == nullptr) {
            error(where + ": service " + hex(a.service_id) + " has no field " + hex(a.field_id));
            return;
        }
        check_values(where, f->schema, a.values);
        if (!hosted_by(n).contains({a.service_id, a.instance_id}) && !f->has_setter) {
            error(where + ": field '" + f->name + "' has no setter and is not hosted by node '" + n.id + "'");
        }
    }

    void check_action(const std::string& where, const NodeConfig& n, const std::set<std::string>&,
                      const UpdateApp& a) {
        require_kind(where, n, {NodeKind::adaptive});
        check_manifest(where, a.manifest);
    }

    void check_action(const std::string& where, const NodeConfig& n, const std::set<std::string>& apps,
                      const StopApp& a) {
        require_kind(where, n, {NodeKind::adaptive});
        if (!apps.contains(a.app)) error(where + ": node '" + n.id + "' has no application '" + a.app + "'");
    }

    void check_action(const std::string& where, const NodeConfig& n, const std::set<std::string>& apps,
                      const StartApp& a) {
        require_kind(where, n, {NodeKind::adaptive});
        if (!apps.contains(a.app)) error(where + ": node '" + n.id + "' has no application '" + a.app + "'");
    }

    void check_generators() {
        for (std::size_t i = 0; i < c_.random_writes.size(); ++i) {
            const auto& g = c_.random_writes[i];
            const auto where = "random_stimuli " + std::to_string(i);
            if (g.min_gap > g.max_gap) error(where + ": min_gap exceeds max_gap");
            if (!(g.step > 0) || !std::isfinite(g.step)) error(where + ": step must be positive");
            if (g.min > g.max) error(where + ": min exceeds max");
            const auto* node = c_.find_node(g.node);
            if (node == nullptr) {
                error(where + ": unknown node '" + g.node + "'");
                continue;
            }
            check_write(where, *node, g.frame_id, g.signal, {g.min, g.max});
            if (g.count > 0 && g.start_tick + (g.count - 1) * g.max_gap >= c_.duration) {
                warn(where + ": generated ticks may run past the duration");
            }
        }
    }

    const ScenarioConfig& c_;
    std::vector<std::string>& errors_;
    std::vector<std::string>* warnings_;
};

}  // namespace

std::vector<std::string> validate_scenario(const ScenarioConfig& config, std::vector<std::string>* warnings) {
    std::vector<std::string> errors;
    Validator(config, errors, warnings).run();
    return errors;
}

LoadedScenario load_scenario(std::string_view json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        fail(Errc::parse_error, e.what());
    }
    LoadedScenario out;
    out.config = parse_config(doc);
    auto errors = validate_scenario(out.config, &out.warnings);
    if (!errors.empty()) throw ValidationErrors(std::move(errors));
    return out;
}

LoadedScenario load_scenario_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(Errc::io_error, "cannot open '" + path.string() + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return load_scenario(buffer.str());
}

std::vector<Stimulus> expand_stimuli(const ScenarioConfig& config) {
    struct Ordered {
        Stimulus stimulus;
        std::size_t order;
    };
    std::vector<Ordered> all;
    for (const auto& s : config.stimuli) all.push_back({s, all.size()});

    for (std::size_t gi = 0; gi < config.random_writes.size(); ++gi) {
        const auto& g = config.random_writes[gi];
        // One stream per generator, derived from the scenario seed only.
        std::seed_seq seq{static_cast<std::uint32_t>(config.seed), static_cast<std::uint32_t>(config.seed >> 32),
                          static_cast<std::uint32_t>(gi)};
        std::mt19937_64 rng(seq);
        const auto steps = static_cast<std::uint64_t>(std::floor((g.max - g.min) / g.step + 1e-9));
        Tick tick = g.start_tick;
        for (std::size_t k = 0; k < g.count; ++k) {
            if (k > 0) tick += g.min_gap + rng() % (g.max_gap - g.min_gap + 1);
            const double value = g.min + static_cast<double>(rng() % (steps + 1)) * g.step;
            all.push_back({{tick, g.node, WriteSignal{g.frame_id, g.signal, value}}, all.size()});
        }
    }
    std::stable_sort(all.begin(), all.end(), [](const Ordered& a, const Ordered& b) {
        return std::tie(a.stimulus.tick, a.stimulus.node, a.order) < std::tie(b.stimulus.tick, b.stimulus.node, b.order);
    });
    std::vector<Stimulus> out;
    out.reserve(all.size());
    for (auto& o : all) out.push_back(std::move(o.stimulus));
    return out;
}

}  // namespace eea
