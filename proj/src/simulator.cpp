#include "eeasim/simulator.hpp"

#include <algorithm>

#include "eeasim/error.hpp"

namespace eea {

namespace {

using nlohmann::json;
using InstanceKey = std::pair<std::uint16_t, std::uint16_t>;

json values_json(const Values& values) {
    json j = json::object();
    for (const auto& [name, v] : values) j[name] = v;
    return j;
}

std::string_view to_string(CallStatus status) {
    switch (status) {
        case CallStatus::pending: return "pending";
        case CallStatus::ok: return "ok";
        case CallStatus::timeout: return "timeout";
        case CallStatus::remote_error: return "remote_error";
    }
    return "?";
}

struct Context {
    explicit Context(ScenarioConfig cfg) : config(std::move(cfg)) {}

    ScenarioConfig config;
    ServiceNetwork net;
    std::map<std::string, VirtualBus> buses;
    TraceLog log;
    Tick now = 0;

    InterfacePtr interface(std::uint16_t service_id) const {
        const auto* s = config.find_service(service_id);
        if (s == nullptr) fail(Errc::invalid_definition, "unknown service " + std::to_string(service_id));
        return s->interface;
    }

    const PayloadSchema* target_schema(const ServiceTarget& t) const {
        const auto* s = config.find_service(t.service_id);
        if (s == nullptr) return nullptr;
        if (t.kind == TargetKind::event) {
            const auto* e = s->interface->find_event(t.element_id);
            return e ? &e->schema : nullptr;
        }
        const auto* f = s->interface->find_field(t.element_id);
        return f ? &f->schema : nullptr;
    }

    void fault(const std::string& node, std::string_view during, const std::exception& e) {
        json d;
        d["during"] = during;
        d["message"] = e.what();
        const auto* err = dynamic_cast<const Error*>(&e);
        d["error"] = err != nullptr ? to_string(err->code()) : "Exception";
        log.emit(node, TraceKind::fault, std::move(d));
    }
};

// SOME/IP endpoint of one node: hosted skeletons, client proxies and the
// subscriptions the node wants to hold.
class ServiceHost {
public:
    using ValueSink = std::function<void(const ServiceTarget&, const Values&)>;

    ServiceHost(Context& ctx, std::string node, std::uint16_t port)
        : ctx_(ctx), node_(std::move(node)), endpoint_{node_, port} {}

    const Endpoint& endpoint() const { return endpoint_; }

    void set_value_sink(ValueSink sink) { on_value_ = std::move(sink); }

    Skeleton& host(std::uint16_t service_id, std::uint16_t instance_id) {
        const InstanceKey key{service_id, instance_id};
        auto it = skeletons_.find(key);
        if (it == skeletons_.end()) {
            const auto* cfg = ctx_.config.find_service(service_id);
            if (cfg == nullptr) fail(Errc::invalid_definition, "unknown service " + std::to_string(service_id));
            auto skel = std::make_unique<Skeleton>(ctx_.net, cfg->interface, instance_id, endpoint_);
            for (const auto& [method_id, reply] : cfg->replies) {
                if (!reply.error_code) continue;
                const auto code = *reply.error_code;
                skel->set_method_handler(method_id, [code](const Values&) -> Values { throw Skeleton::Failure{code}; });
            }
            for (const auto& [field_id, values] : cfg->field_initial) skel->update_field(field_id, values);
            skel->set_field_observer([this, key](const FieldDef& f, const Values& v, std::size_t notified) {
                on_field_update(key, f, v, notified);
            });
            it = skeletons_.emplace(key, std::move(skel)).first;
        }
        it->second->offer(kInfiniteTtl);
        return *it->second;
    }

    void withdraw(std::uint16_t service_id, std::uint16_t instance_id) {
        auto it = skeletons_.find({service_id, instance_id});
        if (it == skeletons_.end()) return;
        it->second->stop_offer();
        skeletons_.erase(it);
    }

    Skeleton* skeleton(std::uint16_t service_id, std::uint16_t instance_id) {
        auto it = skeletons_.find({service_id, instance_id});
        return it == skeletons_.end() ? nullptr : it->second.get();
    }

    std::size_t publish(const ServiceTarget& target, const Values& values) {
        auto* skel = skeleton(target.service_id, target.instance_id);
        if (skel == nullptr) {
            fail(Errc::instance_not_offered, "node '" + node_ + "' does not host service " +
                                                 std::to_string(target.service_id) + " instance " +
                                                 std::to_string(target.instance_id));
        }
        if (target.kind == TargetKind::field) return skel->update_field(target.element_id, values);
        const auto notified = skel->publish_event(target.element_id, values);
        json d;
        d["service_id"] = target.service_id;
        d["instance_id"] = target.instance_id;
        d["event_id"] = target.element_id;
        d["values"] = values_json(values);
        d["subscribers"] = notified;
        ctx_.log.emit(node_, TraceKind::evt_pub, std::move(d));
        return notified;
    }

    void call_method(const CallMethod& a) {
        auto& p = proxy(a.service_id, a.instance_id);
        const auto session = p.call_method(a.method_id, a.values);
        trace_request(p, a.method_id, session, a.values);
    }

    void set_field(const SetField& a) {
        if (auto* skel = skeleton(a.service_id, a.instance_id)) {
            skel->update_field(a.field_id, a.values);
            return;
        }
        auto& p = proxy(a.service_id, a.instance_id);
        const auto session = p.field_set(a.field_id, a.values);
        trace_request(p, p.handle().interface->find_field(a.field_id)->setter_id(), session, a.values);
    }

    void add_subscription(const SubscriptionConfig& cfg) { wanted_.push_back({cfg, std::nullopt, std::nullopt}); }

    void handle(const Datagram& d) {
        const auto msg = decode_message(d.payload);
        switch (msg.message_type) {
            case MessageType::request:
            case MessageType::request_no_return:
                for (auto& [key, skel] : skeletons_) {
                    if (key.first == msg.service_id) {
                        skel->handle(d, msg);
                        break;
                    }
                }
                return;
            case MessageType::response:
            case MessageType::error:
                for (auto& [key, p] : proxies_) {
                    if (p->client_id() != msg.client_id) continue;
                    p->handle(d, msg);
                    for (const auto& r : p->drain_completed()) trace_result(*p, r);
                    return;
                }
                return;
            case MessageType::notification:
                for (auto& [key, p] : proxies_) {
                    if (key.first != msg.service_id || p->handle().endpoint != d.source) continue;
                    p->handle(d, msg);
                    for (const auto& n : p->drain_notifications()) trace_notification(*p, n);
                    return;
                }
                return;
        }
    }

    void on_tick_end() {
        for (auto& [key, p] : proxies_) {
            p->poll_timeouts();
            for (const auto& r : p->drain_completed()) trace_result(*p, r);
        }
        for (auto& w : wanted_) {
            if (w.id && ctx_.net.is_subscribed(*w.id)) continue;
            if (w.tried_version == ctx_.net.registry_version()) continue;
            w.tried_version = ctx_.net.registry_version();
            const auto found = ctx_.net.find_service(w.cfg.service_id, w.cfg.instance_id, endpoint_);
            if (found.empty()) continue;
            w.id = proxy_for(found.front()).subscribe_event(w.cfg.event_id);
        }
    }

private:
    struct Wanted {
        SubscriptionConfig cfg;
        std::optional<SubscriptionId> id;
        std::optional<std::uint64_t> tried_version;
    };

    Proxy& proxy(std::uint16_t service_id, std::uint16_t instance_id) {
        const auto found = ctx_.net.find_service(service_id, instance_id, endpoint_);
        if (found.empty()) {
            fail(Errc::instance_not_offered,
                 "service " + std::to_string(service_id) + " instance " + std::to_string(instance_id) + " not offered");
        }
        return proxy_for(found.front());
    }

    Proxy& proxy_for(const ServiceInstance& instance) {
        const InstanceKey key{instance.service_id(), instance.instance_id};
        auto it = proxies_.find(key);
        if (it == proxies_.end() || it->second->handle().endpoint != instance.endpoint) {
            auto p = std::make_unique<Proxy>(ctx_.net, instance, endpoint_, ctx_.config.method_timeout);
            it = proxies_.insert_or_assign(key, std::move(p)).first;
        }
        return *it->second;
    }

    void trace_request(const Proxy& p, std::uint16_t method_id, std::uint16_t session, const Values& values) {
        json d;
        d["service_id"] = p.handle().service_id();
        d["instance_id"] = p.handle().instance_id;
        d["method_id"] = method_id;
        d["client_id"] = p.client_id();
        d["session_id"] = session;
        d["values"] = values_json(values);
        ctx_.log.emit(node_, TraceKind::method_req, std::move(d));
    }

    void trace_result(const Proxy& p, const CallResult& r) {
        json d;
        d["service_id"] = p.handle().service_id();
        d["instance_id"] = p.handle().instance_id;
        d["method_id"] = r.method_id;
        d["client_id"] = p.client_id();
        d["session_id"] = r.session_id;
        d["status"] = to_string(r.status);
        d["return_code"] = r.return_code;
        d["values"] = values_json(r.values);
        d["requested_at"] = r.sent_at;
        ctx_.log.emit(node_, TraceKind::method_resp, std::move(d));
    }

    void trace_notification(const Proxy& p, const Notification& n) {
        json d;
        d["service_id"] = n.service_id;
        d["instance_id"] = p.handle().instance_id;
        d["event_id"] = n.event_id;
        d["values"] = values_json(n.values);
        d["source"] = n.source.to_string();
        ctx_.log.emit(node_, TraceKind::evt_recv, std::move(d));
        if (!on_value_) return;
        ServiceTarget t{n.service_id, p.handle().instance_id, TargetKind::event, n.event_id};
        if (p.handle().interface->find_event(n.event_id) == nullptr) {
            if (const auto* f = p.handle().interface->field_for_message(n.event_id)) {
                t.kind = TargetKind::field;
                t.element_id = f->id;
            }
        }
        on_value_(t, n.values);
    }

    void on_field_update(const InstanceKey& key, const FieldDef& f, const Values& values, std::size_t notified) {
        json d;
        d["service_id"] = key.first;
        d["instance_id"] = key.second;
        d["field_id"] = f.id;
        d["values"] = values_json(values);
        d["subscribers"] = notified;
        ctx_.log.emit(node_, TraceKind::field_set, d);
        if (f.has_notifier) {
            json p;
            p["service_id"] = key.first;
            p["instance_id"] = key.second;
            p["event_id"] = f.notifier_id();
            p["values"] = values_json(values);
            p["subscribers"] = notified;
            ctx_.log.emit(node_, TraceKind::evt_pub, std::move(p));
        }
        if (on_value_) on_value_({key.first, key.second, TargetKind::field, f.id}, values);
    }

    Context& ctx_;
    std::string node_;
    Endpoint endpoint_;
    std::map<InstanceKey, std::unique_ptr<Skeleton>> skeletons_;
    std::map<InstanceKey, std::unique_ptr<Proxy>> proxies_;
    std::vector<Wanted> wanted_;
    ValueSink on_value_;
};

class Node {
public:
    Node(Context& ctx, const NodeConfig& cfg) : ctx_(ctx), cfg_(cfg) {}
    virtual ~Node() = default;

    const std::string& id() const { return cfg_.id; }

    virtual void begin_tick(Tick) {}
    virtual void start() {}
    virtual void apply(const Action& action) {
        fail(Errc::invalid_definition, std::string(action_name(action)) + " is not supported by " +
                                           std::string(to_string(cfg_.kind)) + " node '" + cfg_.id + "'");
    }
    virtual void on_bus_frame(const std::string&, const BusFrame&) {}
    virtual void on_datagram(const Datagram&) {}
    virtual void on_tick_end() {}

protected:
    void emit(TraceKind kind, json details) { ctx_.log.emit(cfg_.id, kind, std::move(details)); }

    void transmit(const std::string& bus, BusFrame frame) {
        frame.sent_at = ctx_.now;
        frame.sender = cfg_.id;
        const auto frame_id = frame.frame_id;
        const auto payload = to_hex(frame.payload);
        auto& vb = ctx_.buses.at(bus);
        const auto seq = vb.send(std::move(frame));
        json d;
        d["bus"] = bus;
        d["frame_id"] = frame_id;
        d["bus_seq"] = seq;
        d["payload"] = payload;
        d["receivers"] = vb.attached_nodes().size() - 1;
        emit(TraceKind::bus_tx, std::move(d));
    }

    Context& ctx_;
    const NodeConfig& cfg_;
};

class ClassicNode final : public Node {
public:
    ClassicNode(Context& ctx, const NodeConfig& cfg) : Node(ctx, cfg), ecu_(cfg.id, cfg.functions) {}

    const ClassicEcu& ecu() const { return ecu_; }
    const std::map<std::uint32_t, SignalValues>& received() const { return received_; }

    void begin_tick(Tick t) override { ecu_.advance_to(t); }
    void start() override { ecu_.power_up(); }

    void apply(const Action& action) override {
        const auto* write = std::get_if<WriteSignal>(&action);
        if (write == nullptr) return Node::apply(action);
        const auto* frame = ctx_.config.find_frame(write->frame_id);
        if (frame == nullptr) fail(Errc::unknown_frame_id, "no frame " + std::to_string(write->frame_id));
        auto next = shadow_[write->frame_id];
        next[write->signal] = write->value;
        auto encoded = encode_frame(frame->def, next);  // throws before the shadow changes
        shadow_[write->frame_id] = std::move(next);
        if (!frame->def.cycle_time) transmit(frame->bus, std::move(encoded));
    }

    void on_bus_frame(const std::string& bus, const BusFrame& frame) override {
        const auto* def = ctx_.config.find_frame(bus, frame.frame_id);
        if (def != nullptr) received_[frame.frame_id] = decode_frame(def->def, frame);
    }

    void on_tick_end() override {
        for (auto id : cfg_.transmits) {
            const auto* frame = ctx_.config.find_frame(id);
            if (frame == nullptr || !frame->def.cycle_time) continue;
            if (ctx_.now % *frame->def.cycle_time == 0) transmit(frame->bus, encode_frame(frame->def, shadow_[id]));
        }
    }

private:
    ClassicEcu ecu_;
    std::map<std::uint32_t, SignalValues> shadow_;
    std::map<std::uint32_t, SignalValues> received_;
};

json emission_json(std::string_view mode, std::uint32_t frame_id, const Emission& e) {
    json d;
    d["mode"] = mode;
    d["frame_id"] = frame_id;
    d["rule"] = e.rule_index;
    d["service_id"] = e.target.service_id;
    d["instance_id"] = e.target.instance_id;
    d[e.target.kind == TargetKind::event ? "event_id" : "field_id"] = e.target.element_id;
    d["signal_value"] = e.signal_value;
    d["values"] = values_json(e.values);
    d["subscribers"] = e.notified;
    return d;
}

class AdaptiveNode final : public Node, private LifecycleListener {
public:
    AdaptiveNode(Context& ctx, const NodeConfig& cfg) : Node(ctx, cfg), host_(ctx, cfg.id, cfg.port) {
        exec_.set_listener(this);
        exec_.set_transition_observer([this](const StateChange& c) {
            json d;
            d["app"] = c.app;
            d["from"] = to_string(c.from);
            d["to"] = to_string(c.to);
            d["version"] = exec_.contains(c.app) ? exec_.manifest(c.app).version.to_string() : "";
            emit(TraceKind::app_state, std::move(d));
        });
        for (const auto& s : cfg.subscriptions) host_.add_subscription(s);
        if (cfg.adapter) {
            std::vector<FrameDef> frames;
            for (const auto& key : cfg.adapter->frames) {
                if (const auto* f = ctx.config.find_frame(key.bus, key.frame_id)) frames.push_back(f->def);
            }
            adapter_.emplace(
                std::move(frames), cfg.adapter->rules,
                [&ctx](const ServiceTarget& t) { return ctx.target_schema(t); },
                [this](const ServiceTarget& t, const Values& v) { return host_.publish(t, v); });
        }
    }

    const ExecutionManager& exec() const { return exec_; }

    void begin_tick(Tick t) override { exec_.advance_to(t); }

    void start() override {
        exec_.load_manifests(cfg_.manifests);
        exec_.start_all();
    }

    void apply(const Action& action) override {
        if (const auto* a = std::get_if<PublishEvent>(&action)) {
            host_.publish({a->service_id, a->instance_id, TargetKind::event, a->event_id}, a->values);
        } else if (const auto* a = std::get_if<CallMethod>(&action)) {
            host_.call_method(*a);
        } else if (const auto* a = std::get_if<SetField>(&action)) {
            host_.set_field(*a);
        } else if (const auto* a = std::get_if<UpdateApp>(&action)) {
            if (exec_.contains(a->manifest.app_name)) {
                exec_.update_app(a->manifest.app_name, a->manifest, cfg_.restart_dependents);
            } else {
                exec_.add_app(a->manifest);
            }
        } else if (const auto* a = std::get_if<StopApp>(&action)) {
            exec_.stop_app(a->app);
        } else if (const auto* a = std::get_if<StartApp>(&action)) {
            exec_.start_app(a->app);
        } else {
            Node::apply(action);
        }
    }

    void on_datagram(const Datagram& d) override {
        if (d.destination.port == cfg_.port) return host_.handle(d);
        if (!adapter_ || d.destination.port != cfg_.adapter->port) return;
        const auto frame_id = RawUdpFrame::frame_id_of(d.payload);
        const auto result = adapter_->handle(d.payload);
        for (const auto& e : result.emissions) emit(TraceKind::gw_route, emission_json("adapter", frame_id, e));
        for (const auto& f : result.failures) {
            ctx_.fault(cfg_.id, "adapter rule " + std::to_string(f.rule_index), Error(f.code, f.message));
        }
    }

    void on_tick_end() override { host_.on_tick_end(); }

private:
    void on_running(const AppManifest& app) override {
        for (const auto& p : app.provides) host_.host(p.service_id, p.instance_id);
    }

    void on_terminating(const AppManifest& app) override {
        for (const auto& p : app.provides) host_.withdraw(p.service_id, p.instance_id);
    }

    ServiceHost host_;
    ExecutionManager exec_;
    std::optional<UdpAdapter> adapter_;
};

FrameCatalog catalog_for(const ScenarioConfig& config, const std::vector<std::string>& buses) {
    FrameCatalog out;
    for (const auto& f : config.frames) {
        if (std::find(buses.begin(), buses.end(), f.bus) != buses.end()) out.emplace(FrameKey{f.bus, f.def.frame_id}, f.def);
    }
    return out;
}

class GatewayNode final : public Node {
public:
    GatewayNode(Context& ctx, const NodeConfig& cfg)
        : Node(ctx, cfg),
          host_(ctx, cfg.id, cfg.port),
          gateway_(
              *cfg.mapping, catalog_for(ctx.config, cfg.buses),
              [&ctx](const ServiceTarget& t) { return ctx.target_schema(t); },
              [this](const ServiceTarget& t, const Values& v) { return host_.publish(t, v); }) {
        for (const auto& s : cfg.subscriptions) host_.add_subscription(s);
        for (const auto& rule : cfg.mapping->rules) {
            const auto* t = rule.service_target();
            if (t != nullptr && rule.direction == RuleDirection::service_to_bus && t->kind == TargetKind::event) {
                host_.add_subscription({t->service_id, t->instance_id, t->element_id});
            }
        }
        host_.set_value_sink([this](const ServiceTarget& t, const Values& v) {
            for (auto& [bus, frame] : gateway_.on_service_value(t, v)) transmit(bus, std::move(frame));
        });
    }

    const Gateway& gateway() const { return gateway_; }

    void start() override {
        for (const auto& [service_id, instance_id] : gateway_.offered_targets()) host_.host(service_id, instance_id);
    }

    void apply(const Action& action) override {
        if (const auto* a = std::get_if<PublishEvent>(&action)) {
            host_.publish({a->service_id, a->instance_id, TargetKind::event, a->event_id}, a->values);
        } else if (const auto* a = std::get_if<SetField>(&action)) {
            host_.set_field(*a);
        } else {
            Node::apply(action);
        }
    }

    void on_bus_frame(const std::string& bus, const BusFrame& frame) override {
        if (gateway_.mapping().mode == GatewayMode::service_gateway) {
            const auto result = gateway_.on_bus_frame_service_mode(bus, frame);
            if (!result.matched) return drop(bus, frame);
            for (const auto& e : result.emissions) emit(TraceKind::gw_route, emission_json("service", frame.frame_id, e));
            for (const auto& f : result.failures) {
                ctx_.fault(cfg_.id, "gateway rule " + std::to_string(f.rule_index), Error(f.code, f.message));
            }
            return;
        }
        std::vector<RawUdpFrame> out;
        try {
            out = gateway_.on_bus_frame_signal_mode(bus, frame);
        } catch (const Error& e) {
            if (e.code() != Errc::no_route) throw;
            return drop(bus, frame);
        }
        for (auto& udp : out) {
            json d;
            d["mode"] = "signal";
            d["frame_id"] = frame.frame_id;
            d["destination"] = udp.destination.to_string();
            d["payload"] = to_hex(udp.payload);
            emit(TraceKind::gw_route, std::move(d));
            ctx_.net.send_datagram(host_.endpoint(), udp.destination, std::move(udp.payload));
        }
    }

    void on_datagram(const Datagram& d) override {
        if (d.destination.port == cfg_.port) host_.handle(d);
    }

    void on_tick_end() override { host_.on_tick_end(); }

private:
    void drop(const std::string& bus, const BusFrame& frame) {
        json d;
        d["bus"] = bus;
        d["frame_id"] = frame.frame_id;
        d["dropped_total"] = gateway_.counters().dropped;
        emit(TraceKind::gw_drop, std::move(d));
    }

    ServiceHost host_;
    Gateway gateway_;
};

struct InboxItem {
    std::string bus;  // empty for datagrams
    BusDelivery delivery;
    Datagram datagram;
};

}  // namespace

struct Simulator::Impl {
    explicit Impl(const ScenarioConfig& config) : ctx(config) {
        for (const auto& b : ctx.config.buses) ctx.buses.emplace(b.name, VirtualBus(b.name));
        for (const auto& n : ctx.config.nodes) {
            for (const auto& b : n.buses) ctx.buses.at(b).attach(n.id);
            switch (n.kind) {
                case NodeKind::classic: nodes.emplace(n.id, std::make_unique<ClassicNode>(ctx, n)); break;
                case NodeKind::adaptive: nodes.emplace(n.id, std::make_unique<AdaptiveNode>(ctx, n)); break;
                case NodeKind::gateway: nodes.emplace(n.id, std::make_unique<GatewayNode>(ctx, n)); break;
            }
        }
        ctx.net.set_sd_observer([this](const SdEntry& e) { trace_sd(e); });
        stimuli = expand_stimuli(ctx.config);
    }

    void trace_sd(const SdEntry& e) {
        json d;
        d["service_id"] = e.service_id;
        d["instance_id"] = e.instance_id;
        TraceKind kind = TraceKind::sd_offer;
        switch (e.kind) {
            case SdKind::offer:
                d["ttl"] = e.ttl;
                d["endpoint"] = e.origin.to_string();
                break;
            case SdKind::find: kind = TraceKind::sd_find; break;
            case SdKind::subscribe:
            case SdKind::subscribe_ack:
                kind = TraceKind::sd_subscribe;
                d["entry"] = e.kind == SdKind::subscribe ? "SUBSCRIBE" : "SUBSCRIBE_ACK";
                d["event_id"] = e.event_id.value_or(0);
                d["ttl"] = e.ttl;
                break;
        }
        ctx.log.emit(e.origin.node, kind, std::move(d));
    }

    template <typename F>
    void guarded(const std::string& node, std::string_view during, F&& f) {
        try {
            f();
        } catch (const std::exception& e) {
            ctx.fault(node, during, e);
        }
    }

    bool step() {
        if (next_tick >= ctx.config.duration) return false;
        const Tick t = next_tick++;
        ctx.now = t;
        ctx.log.set_tick(t);
        ctx.net.advance_to(t);
        for (auto& [id, node] : nodes) node->begin_tick(t);

        if (t == 0) {
            for (auto& [id, node] : nodes) guarded(id, "startup", [&] { node->start(); });
        }

        while (next_stimulus < stimuli.size() && stimuli[next_stimulus].tick <= t) {
            const auto& s = stimuli[next_stimulus++];
            if (s.tick < t) continue;
            auto it = nodes.find(s.node);
            if (it == nodes.end()) continue;
            guarded(s.node, action_name(s.action), [&] { it->second->apply(s.action); });
        }

        std::map<std::string, std::vector<InboxItem>> inbox;
        for (auto& [name, bus] : ctx.buses) {
            for (auto& d : bus.take_due(t)) {
                auto receiver = d.receiver;
                inbox[receiver].push_back({name, std::move(d), {}});
            }
        }
        for (auto& d : ctx.net.take_due()) {
            auto receiver = d.destination.node;
            inbox[receiver].push_back({{}, {}, std::move(d)});
        }

        for (auto& [id, node] : nodes) {
            for (const auto& item : inbox[id]) {
                if (!item.bus.empty()) {
                    const auto& f = item.delivery.frame;
                    json d;
                    d["bus"] = item.bus;
                    d["frame_id"] = f.frame_id;
                    d["bus_seq"] = item.delivery.bus_seq;
                    d["sender"] = f.sender;
                    d["payload"] = to_hex(f.payload);
                    ctx.log.emit(id, TraceKind::bus_rx, std::move(d));
                    guarded(id, "bus_rx", [&] { node->on_bus_frame(item.bus, f); });
                } else {
                    guarded(id, "datagram", [&] { node->on_datagram(item.datagram); });
                }
            }
            guarded(id, "tick", [&] { node->on_tick_end(); });
        }
        return true;
    }

    Context ctx;
    std::map<std::string, std::unique_ptr<Node>> nodes;
    std::vector<Stimulus> stimuli;
    std::size_t next_stimulus = 0;
    Tick next_tick = 0;
};

Simulator::Simulator(const ScenarioConfig& config) : impl_(std::make_unique<Impl>(config)) {}

Simulator::~Simulator() = default;

bool Simulator::step() { return impl_->step(); }

Tick Simulator::next_tick() const { return impl_->next_tick; }

bool Simulator::finished() const { return impl_->next_tick >= impl_->ctx.config.duration; }

RunResult Simulator::run() {
    while (step()) {
    }
    RunResult result;
    result.trace = impl_->ctx.log.events();
    result.faults = static_cast<std::size_t>(std::count_if(result.trace.begin(), result.trace.end(),
                                                           [](const TraceEvent& e) { return e.kind == TraceKind::fault; }));
    return result;
}

const Trace& Simulator::trace() const { return impl_->ctx.log.events(); }

ServiceNetwork& Simulator::network() { return impl_->ctx.net; }

const ExecutionManager* Simulator::execution_manager(const std::string& node) const {
    auto it = impl_->nodes.find(node);
    if (it == impl_->nodes.end()) return nullptr;
    const auto* adaptive = dynamic_cast<const AdaptiveNode*>(it->second.get());
    return adaptive ? &adaptive->exec() : nullptr;
}

const ClassicEcu* Simulator::classic_ecu(const std::string& node) const {
    auto it = impl_->nodes.find(node);
    if (it == impl_->nodes.end()) return nullptr;
    const auto* classic = dynamic_cast<const ClassicNode*>(it->second.get());
    return classic ? &classic->ecu() : nullptr;
}

std::optional<GatewayCounters> Simulator::gateway_counters(const std::string& node) const {
    auto it = impl_->nodes.find(node);
    if (it == impl_->nodes.end()) return std::nullopt;
    const auto* gw = dynamic_cast<const GatewayNode*>(it->second.get());
    if (gw == nullptr) return std::nullopt;
    return gw->gateway().counters();
}

std::optional<SignalValues> Simulator::received_signals(const std::string& node, std::uint32_t frame_id) const {
    auto it = impl_->nodes.find(node);
    if (it == impl_->nodes.end()) return std::nullopt;
    const auto* classic = dynamic_cast<const ClassicNode*>(it->second.get());
    if (classic == nullptr) return std::nullopt;
    auto f = classic->received().find(frame_id);
    if (f == classic->received().end()) return std::nullopt;
    return f->second;
}

RunResult run(const ScenarioConfig& config) { return Simulator(config).run(); }

}  // namespace eea
