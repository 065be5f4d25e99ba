#include "eeasim/service.hpp"

#include <algorithm>
#include <cassert>
#include <limits>

#include "eeasim/error.hpp"

namespace eea {

// ---------------------------------------------------------------------------
// ServiceInterfaceDef

void ServiceInterfaceDef::validate() const {
    std::set<std::uint16_t> ids;
    auto claim = [&](std::uint16_t id, const std::string& what) {
        if (!ids.insert(id).second) {
            fail(Errc::invalid_definition, "service '" + name + "': id " + std::to_string(id) + " of " + what +
                                               " collides with another member");
        }
    };
    for (const auto& e : events) {
        if ((e.id & kEventIdFlag) == 0) {
            fail(Errc::invalid_definition, "event '" + e.name + "' id must have the most significant bit set");
        }
        claim(e.id, "event '" + e.name + "'");
    }
    for (const auto& m : methods) {
        if ((m.id & kEventIdFlag) != 0) {
            fail(Errc::invalid_definition, "method '" + m.name + "' id must have the most significant bit clear");
        }
        claim(m.id, "method '" + m.name + "'");
    }
    for (const auto& f : fields) {
        if ((f.id & kEventIdFlag) != 0 || f.id == 0x7FFF) {
            fail(Errc::invalid_definition, "field '" + f.name + "' base id must lie in [0, 0x7FFE]");
        }
        if (f.schema.elements.empty()) fail(Errc::invalid_definition, "field '" + f.name + "' has an empty schema");
        if (f.has_getter) claim(f.getter_id(), "getter of field '" + f.name + "'");
        if (f.has_setter) claim(f.setter_id(), "setter of field '" + f.name + "'");
        if (f.has_notifier) claim(f.notifier_id(), "notifier of field '" + f.name + "'");
    }
}

const EventDef* ServiceInterfaceDef::find_event(std::uint16_t id) const {
    for (const auto& e : events) {
        if (e.id == id) return &e;
    }
    return nullptr;
}

const MethodDef* ServiceInterfaceDef::find_method(std::uint16_t id) const {
    for (const auto& m : methods) {
        if (m.id == id) return &m;
    }
    return nullptr;
}

const FieldDef* ServiceInterfaceDef::find_field(std::uint16_t id) const {
    for (const auto& f : fields) {
        if (f.id == id) return &f;
    }
    return nullptr;
}

const FieldDef* ServiceInterfaceDef::field_for_message(std::uint16_t message_id) const {
    for (const auto& f : fields) {
        if ((f.has_getter && f.getter_id() == message_id) || (f.has_setter && f.setter_id() == message_id) ||
            (f.has_notifier && f.notifier_id() == message_id)) {
            return &f;
        }
    }
    return nullptr;
}

const PayloadSchema* ServiceInterfaceDef::notification_schema(std::uint16_t event_id) const {
    if (const auto* e = find_event(event_id)) return &e->schema;
    if ((event_id & kEventIdFlag) != 0) {
        if (const auto* f = field_for_message(event_id)) return &f->schema;
    }
    return nullptr;
}

// ---------------------------------------------------------------------------
// ServiceNetwork

Tick ServiceNetwork::expiry(Tick now, Tick ttl) {
    if (ttl >= kInfiniteTtl) return std::numeric_limits<Tick>::max();
    return now + ttl;
}

void ServiceNetwork::emit(SdEntry entry) const {
    if (observer_) observer_(entry);
}

void ServiceNetwork::advance_to(Tick tick) {
    now_ = std::max(now_, tick);
    bool changed = false;
    for (auto it = offers_.begin(); it != offers_.end();) {
        if (it->second.expires_at <= now_) {
            const auto key = it->first;
            it = offers_.erase(it);
            drop_subscriptions_of(key);
            changed = true;
        } else {
            ++it;
        }
    }
    std::erase_if(subscriptions_, [&](const auto& kv) { return kv.second.expires_at <= now_; });
    if (changed) ++registry_version_;
}

void ServiceNetwork::drop_subscriptions_of(const OfferKey& key) {
    std::erase_if(subscriptions_, [&](const auto& kv) {
        return kv.second.service_id == key.first && kv.second.instance_id == key.second;
    });
}

void ServiceNetwork::offer_service(const ServiceInstance& instance, Tick ttl) {
    if (!instance.interface) fail(Errc::invalid_definition, "service instance without an interface");
    const OfferKey key{instance.service_id(), instance.instance_id};
    if (ttl == 0) {
        auto it = offers_.find(key);
        if (it != offers_.end() && it->second.instance.endpoint == instance.endpoint) {
            stop_offer(key.first, key.second);
        }
        return;
    }
    auto it = offers_.find(key);
    if (it != offers_.end()) {
        if (it->second.instance.endpoint != instance.endpoint) {
            fail(Errc::duplicate_instance, "service " + std::to_string(key.first) + " instance " +
                                               std::to_string(key.second) + " already offered by " +
                                               it->second.instance.endpoint.to_string());
        }
        it->second.expires_at = expiry(now_, ttl);
    } else {
        offers_.emplace(key, Offer{instance, expiry(now_, ttl)});
        ++registry_version_;
    }
    emit({SdKind::offer, key.first, key.second, std::nullopt, ttl, instance.endpoint, now_});
}

void ServiceNetwork::stop_offer(std::uint16_t service_id, std::uint16_t instance_id) {
    auto it = offers_.find({service_id, instance_id});
    if (it == offers_.end()) return;
    const auto endpoint = it->second.instance.endpoint;
    offers_.erase(it);
    drop_subscriptions_of({service_id, instance_id});
    ++registry_version_;
    emit({SdKind::offer, service_id, instance_id, std::nullopt, 0, endpoint, now_});
}

std::vector<ServiceInstance> ServiceNetwork::find_service(std::uint16_t service_id, std::uint16_t instance_id,
                                                          const std::optional<Endpoint>& origin) {
    std::vector<ServiceInstance> found;
    for (const auto& [key, offer] : offers_) {
        if (key.first != service_id) continue;
        if (instance_id != kAnyInstance && key.second != instance_id) continue;
        if (offer.expires_at <= now_) continue;
        found.push_back(offer.instance);
    }
    std::sort(found.begin(), found.end(), [](const ServiceInstance& a, const ServiceInstance& b) {
        return std::tie(a.instance_id, a.endpoint) < std::tie(b.instance_id, b.endpoint);
    });
    if (origin) emit({SdKind::find, service_id, instance_id, std::nullopt, 0, *origin, now_});
    return found;
}

std::vector<ServiceInstance> ServiceNetwork::offers_from(const std::string& node) const {
    std::vector<ServiceInstance> out;
    for (const auto& [key, offer] : offers_) {
        if (offer.instance.endpoint.node == node && offer.expires_at > now_) out.push_back(offer.instance);
    }
    return out;
}

SubscriptionId ServiceNetwork::subscribe_event(const Endpoint& subscriber, std::uint16_t service_id,
                                               std::uint16_t instance_id, std::uint16_t event_id, Tick ttl) {
    auto offer = offers_.find({service_id, instance_id});
    if (offer == offers_.end() || offer->second.expires_at <= now_) {
        fail(Errc::instance_not_offered,
             "service " + std::to_string(service_id) + " instance " + std::to_string(instance_id) + " not offered");
    }
    if (offer->second.instance.interface->notification_schema(event_id) == nullptr) {
        fail(Errc::unknown_event, "service " + std::to_string(service_id) + " has no event " + std::to_string(event_id));
    }
    emit({SdKind::subscribe, service_id, instance_id, event_id, ttl, subscriber, now_});

    SubscriptionId id = 0;
    for (auto& [sid, sub] : subscriptions_) {
        if (sub.subscriber == subscriber && sub.service_id == service_id && sub.instance_id == instance_id &&
            sub.event_id == event_id) {
            sub.expires_at = expiry(now_, ttl);
            id = sid;
            break;
        }
    }
    if (id == 0) {
        id = next_subscription_++;
        subscriptions_.emplace(id, Subscription{subscriber, service_id, instance_id, event_id, expiry(now_, ttl)});
    }
    emit({SdKind::subscribe_ack, service_id, instance_id, event_id, ttl, offer->second.instance.endpoint, now_});
    return id;
}

void ServiceNetwork::unsubscribe(SubscriptionId id) { subscriptions_.erase(id); }

bool ServiceNetwork::is_subscribed(SubscriptionId id) const {
    auto it = subscriptions_.find(id);
    return it != subscriptions_.end() && it->second.expires_at > now_;
}

std::vector<Endpoint> ServiceNetwork::subscribers(std::uint16_t service_id, std::uint16_t instance_id,
                                                  std::uint16_t event_id) const {
    std::vector<Endpoint> out;
    for (const auto& [id, sub] : subscriptions_) {
        if (sub.service_id == service_id && sub.instance_id == instance_id && sub.event_id == event_id &&
            sub.expires_at > now_) {
            out.push_back(sub.subscriber);
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

void ServiceNetwork::send_message(const Endpoint& from, const Endpoint& to, const WireMessage& msg) {
    Bytes bytes = encode_message(msg);
    assert(bytes.size() == kHeaderSize + msg.payload.size() && msg.length() == 8 + msg.payload.size());
    send_datagram(from, to, std::move(bytes));
}

void ServiceNetwork::send_datagram(const Endpoint& from, const Endpoint& to, Bytes payload) {
    in_flight_.push_back(Datagram{from, to, std::move(payload), now_, next_seq_++});
}

std::vector<Datagram> ServiceNetwork::take_due() {
    std::vector<Datagram> due;
    while (!in_flight_.empty() && in_flight_.front().sent_at < now_) {
        due.push_back(std::move(in_flight_.front()));
        in_flight_.pop_front();
    }
    return due;
}

void ServiceNetwork::bind(const Endpoint& endpoint, Handler handler) { handlers_[endpoint] = std::move(handler); }

void ServiceNetwork::unbind(const Endpoint& endpoint) { handlers_.erase(endpoint); }

std::size_t ServiceNetwork::step() {
    advance_to(now_ + 1);
    auto due = take_due();
    std::stable_sort(due.begin(), due.end(),
                     [](const Datagram& a, const Datagram& b) { return a.destination.node < b.destination.node; });
    std::size_t delivered = 0;
    for (const auto& d : due) {
        auto it = handlers_.find(d.destination);
        if (it == handlers_.end()) continue;
        it->second(d);
        ++delivered;
    }
    return delivered;
}

// ---------------------------------------------------------------------------
// Skeleton

Skeleton::Skeleton(ServiceNetwork& net, InterfacePtr interface, std::uint16_t instance_id, Endpoint endpoint)
    : net_(net), instance_{std::move(interface), instance_id, std::move(endpoint)} {
    instance_.interface->validate();
    for (const auto& f : instance_.interface->fields) {
        Values zero;
        for (const auto& e : f.schema.elements) zero.emplace(e.name, 0.0);
        fields_.emplace(f.id, std::move(zero));
    }
}

void Skeleton::offer(Tick ttl) {
    net_.offer_service(instance_, ttl);
    offered_ = ttl != 0;
}

void Skeleton::stop_offer() {
    if (offered_) net_.offer_service(instance_, 0);
    offered_ = false;
}

std::size_t Skeleton::publish_event(std::uint16_t event_id, const Values& values) {
    const auto* ev = interface().find_event(event_id);
    if (ev == nullptr) {
        fail(Errc::unknown_event, "service '" + interface().name + "' has no event " + std::to_string(event_id));
    }
    const Bytes payload = ev->schema.serialize(values);
    const auto targets = net_.subscribers(instance_.service_id(), instance_.instance_id, event_id);
    for (const auto& to : targets) {
        WireMessage msg;
        msg.service_id = instance_.service_id();
        msg.method_id = event_id;
        msg.interface_version = interface().interface_version;
        msg.message_type = MessageType::notification;
        msg.payload = payload;
        net_.send_message(instance_.endpoint, to, msg);
    }
    return targets.size();
}

void Skeleton::set_method_handler(std::uint16_t method_id, MethodHandler handler) {
    if (interface().find_method(method_id) == nullptr) {
        fail(Errc::unknown_method, "service '" + interface().name + "' has no method " + std::to_string(method_id));
    }
    handlers_[method_id] = std::move(handler);
}

const Values& Skeleton::field_value(std::uint16_t field_id) const {
    auto it = fields_.find(field_id);
    if (it == fields_.end()) fail(Errc::unknown_field, "no field " + std::to_string(field_id));
    return it->second;
}

std::size_t Skeleton::update_field(std::uint16_t field_id, const Values& values) {
    const auto* field = interface().find_field(field_id);
    if (field == nullptr) fail(Errc::unknown_field, "no field " + std::to_string(field_id));
    (void)field->schema.serialize(values);  // schema check
    Values stored;
    for (const auto& e : field->schema.elements) {
        stored.emplace(e.name, PayloadSchema::coerce(e.type, values.at(e.name), e.name));
    }
    fields_[field_id] = std::move(stored);
    const std::size_t notified = field->has_notifier ? notify_field(field_id) : 0;
    if (field_observer_) field_observer_(*field, fields_[field_id], notified);
    return notified;
}

std::size_t Skeleton::notify_field(std::uint16_t field_id) {
    const auto* field = interface().find_field(field_id);
    if (field == nullptr) fail(Errc::unknown_field, "no field " + std::to_string(field_id));
    if (!field->has_notifier) fail(Errc::operation_not_supported, "field '" + field->name + "' has no notifier");
    const Bytes payload = field->schema.serialize(fields_.at(field_id));
    const auto targets = net_.subscribers(instance_.service_id(), instance_.instance_id, field->notifier_id());
    for (const auto& to : targets) {
        WireMessage msg;
        msg.service_id = instance_.service_id();
        msg.method_id = field->notifier_id();
        msg.interface_version = interface().interface_version;
        msg.message_type = MessageType::notification;
        msg.payload = payload;
        net_.send_message(instance_.endpoint, to, msg);
    }
    return targets.size();
}

void Skeleton::reply(const Datagram& datagram, const WireMessage& request, MessageType type, std::uint8_t code,
                     Bytes payload) {
    if (request.message_type == MessageType::request_no_return) return;
    WireMessage msg;
    msg.service_id = request.service_id;
    msg.method_id = request.method_id;
    msg.client_id = request.client_id;
    msg.session_id = request.session_id;
    msg.interface_version = interface().interface_version;
    msg.message_type = type;
    msg.return_code = code;
    msg.payload = std::move(payload);
    net_.send_message(instance_.endpoint, datagram.source, msg);
}

void Skeleton::handle(const Datagram& datagram, const WireMessage& msg) {
    if (!offered_) return;  // a withdrawn instance stays silent; callers time out
    if (msg.message_type != MessageType::request && msg.message_type != MessageType::request_no_return) return;
    auto error = [&](ReturnCode code) {
        reply(datagram, msg, MessageType::error, static_cast<std::uint8_t>(code), {});
    };
    if (msg.interface_version != interface().interface_version) return error(ReturnCode::wrong_interface_version);

    if (const auto* method = interface().find_method(msg.method_id)) {
        Values request;
        try {
            request = method->request.deserialize(msg.payload);
        } catch (const Error&) {
            return error(ReturnCode::malformed_message);
        }
        Values response;
        try {
            auto it = handlers_.find(method->id);
            if (it != handlers_.end()) {
                response = it->second(request);
            } else {
                for (const auto& e : method->response.elements) {
                    auto v = request.find(e.name);
                    response.emplace(e.name, v == request.end() ? 0.0 : v->second);
                }
            }
            reply(datagram, msg, MessageType::response, 0, method->response.serialize(response));
        } catch (const Failure& f) {
            reply(datagram, msg, MessageType::error, f.return_code, {});
        } catch (const Error&) {
            error(ReturnCode::not_ok);
        }
        return;
    }

    const auto* field = interface().field_for_message(msg.method_id);
    if (field != nullptr && field->has_getter && field->getter_id() == msg.method_id) {
        return reply(datagram, msg, MessageType::response, 0, field->schema.serialize(fields_.at(field->id)));
    }
    if (field != nullptr && field->has_setter && field->setter_id() == msg.method_id) {
        try {
            update_field(field->id, field->schema.deserialize(msg.payload));
        } catch (const Error&) {
            return error(ReturnCode::malformed_message);
        }
        return reply(datagram, msg, MessageType::response, 0, field->schema.serialize(fields_.at(field->id)));
    }
    error(ReturnCode::unknown_method);
}

// ---------------------------------------------------------------------------
// Proxy

Proxy::Proxy(ServiceNetwork& net, ServiceInstance handle, Endpoint self, Tick timeout)
    : net_(net),
      handle_(std::move(handle)),
      self_(std::move(self)),
      client_id_(net.allocate_client_id()),
      timeout_(timeout) {}

std::uint16_t Proxy::next_session() {
    do {
        session_ = session_ == 0xFFFF ? 1 : static_cast<std::uint16_t>(session_ + 1);
    } while (outstanding_.contains(session_));
    return session_;
}

std::uint16_t Proxy::send_request(std::uint16_t method_id, Bytes payload) {
    WireMessage msg;
    msg.service_id = handle_.service_id();
    msg.method_id = method_id;
    msg.client_id = client_id_;
    msg.session_id = next_session();
    msg.interface_version = handle_.interface->interface_version;
    msg.message_type = MessageType::request;
    msg.payload = std::move(payload);
    net_.send_message(self_, handle_.endpoint, msg);

    CallResult pending;
    pending.session_id = msg.session_id;
    pending.method_id = method_id;
    pending.sent_at = net_.now();
    outstanding_.emplace(msg.session_id, pending);
    return msg.session_id;
}

std::uint16_t Proxy::call_method(std::uint16_t method_id, const Values& request) {
    const auto* method = handle_.interface->find_method(method_id);
    if (method == nullptr) {
        fail(Errc::unknown_method,
             "service '" + handle_.interface->name + "' has no method " + std::to_string(method_id));
    }
    return send_request(method_id, method->request.serialize(request));
}

std::uint16_t Proxy::field_get(std::uint16_t field_id) {
    const auto* field = handle_.interface->find_field(field_id);
    if (field == nullptr) fail(Errc::unknown_field, "no field " + std::to_string(field_id));
    if (!field->has_getter) fail(Errc::operation_not_supported, "field '" + field->name + "' has no getter");
    return send_request(field->getter_id(), {});
}

std::uint16_t Proxy::field_set(std::uint16_t field_id, const Values& value) {
    const auto* field = handle_.interface->find_field(field_id);
    if (field == nullptr) fail(Errc::unknown_field, "no field " + std::to_string(field_id));
    if (!field->has_setter) fail(Errc::operation_not_supported, "field '" + field->name + "' has no setter");
    return send_request(field->setter_id(), field->schema.serialize(value));
}

SubscriptionId Proxy::field_notify(std::uint16_t field_id, Tick ttl) {
    const auto* field = handle_.interface->find_field(field_id);
    if (field == nullptr) fail(Errc::unknown_field, "no field " + std::to_string(field_id));
    if (!field->has_notifier) fail(Errc::operation_not_supported, "field '" + field->name + "' has no notifier");
    return net_.subscribe_event(self_, handle_.service_id(), handle_.instance_id, field->notifier_id(), ttl);
}

SubscriptionId Proxy::subscribe_event(std::uint16_t event_id, Tick ttl) {
    return net_.subscribe_event(self_, handle_.service_id(), handle_.instance_id, event_id, ttl);
}

void Proxy::handle(const Datagram& datagram, const WireMessage& msg) {
    if (msg.service_id != handle_.service_id()) return;

    if (msg.message_type == MessageType::notification) {
        const auto* schema = handle_.interface->notification_schema(msg.method_id);
        if (schema == nullptr) return;
        notifications_.push_back({msg.service_id, msg.method_id, schema->deserialize(msg.payload), datagram.source,
                                  net_.now()});
        return;
    }
    if (msg.message_type != MessageType::response && msg.message_type != MessageType::error) return;

    auto it = outstanding_.find(msg.session_id);
    if (msg.client_id != client_id_ || it == outstanding_.end() || it->second.method_id != msg.method_id) {
        ++unmatched_;
        return;
    }
    CallResult result = it->second;
    outstanding_.erase(it);
    result.completed_at = net_.now();
    result.return_code = msg.return_code;
    if (msg.message_type == MessageType::error) {
        result.status = CallStatus::remote_error;
    } else {
        const PayloadSchema* schema = nullptr;
        if (const auto* method = handle_.interface->find_method(msg.method_id)) {
            schema = &method->response;
        } else if (const auto* field = handle_.interface->field_for_message(msg.method_id)) {
            schema = &field->schema;
        }
        try {
            if (schema == nullptr) fail(Errc::unknown_method, "unexpected response id");
            result.values = schema->deserialize(msg.payload);
            result.status = CallStatus::ok;
        } catch (const Error&) {
            result.status = CallStatus::remote_error;
            result.return_code = static_cast<std::uint8_t>(ReturnCode::malformed_message);
        }
    }
    finished_[result.session_id] = result;
    completed_.push_back(std::move(result));
}

std::vector<CallResult> Proxy::poll_timeouts() {
    std::vector<CallResult> expired;
    for (auto it = outstanding_.begin(); it != outstanding_.end();) {
        if (net_.now() - it->second.sent_at >= timeout_) {
            CallResult result = it->second;
            result.status = CallStatus::timeout;
            result.completed_at = net_.now();
            it = outstanding_.erase(it);
            finished_[result.session_id] = result;
            completed_.push_back(result);
            expired.push_back(std::move(result));
        } else {
            ++it;
        }
    }
    return expired;
}

const CallResult* Proxy::result(std::uint16_t session_id) const {
    if (auto it = outstanding_.find(session_id); it != outstanding_.end()) return &it->second;
    if (auto it = finished_.find(session_id); it != finished_.end()) return &it->second;
    return nullptr;
}

std::vector<CallResult> Proxy::drain_completed() { return std::exchange(completed_, {}); }

std::vector<Notification> Proxy::drain_notifications() { return std::exchange(notifications_, {}); }

}  // namespace eea
