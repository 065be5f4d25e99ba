#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "eeasim/schema.hpp"
#include "eeasim/types.hpp"
#include "eeasim/wire.hpp"

namespace eea {

inline constexpr std::uint16_t kEventIdFlag = 0x8000;
// SOME/IP-SD "until next reboot" lifetime.
inline constexpr Tick kInfiniteTtl = 0xFFFFFF;
inline constexpr Tick kDefaultMethodTimeout = 16;

struct EventDef {
    std::uint16_t id = 0;
    std::string name;
    PayloadSchema schema;
};

struct MethodDef {
    std::uint16_t id = 0;
    std::string name;
    PayloadSchema request;
    PayloadSchema response;
};

// Getter = base, setter = base + 1, notifier event = 0x8000 | base.
struct FieldDef {
    std::uint16_t id = 0;
    std::string name;
    PayloadSchema schema;
    bool has_getter = false;
    bool has_setter = false;
    bool has_notifier = false;

    std::uint16_t getter_id() const { return id; }
    std::uint16_t setter_id() const { return static_cast<std::uint16_t>(id + 1); }
    std::uint16_t notifier_id() const { return static_cast<std::uint16_t>(id | kEventIdFlag); }
};

struct ServiceInterfaceDef {
    std::string name;
    std::uint16_t service_id = 0;
    std::uint8_t interface_version = 1;
    std::vector<EventDef> events;
    std::vector<MethodDef> methods;
    std::vector<FieldDef> fields;

    /// Throws InvalidDefinition on id-space violations or collisions.
    void validate() const;

    const EventDef* find_event(std::uint16_t id) const;
    const MethodDef* find_method(std::uint16_t id) const;
    const FieldDef* find_field(std::uint16_t id) const;
    /// Field owning a getter/setter method id or notifier event id.
    const FieldDef* field_for_message(std::uint16_t message_id) const;
    /// Schema carried by a NOTIFICATION with this event id (plain or field notifier).
    const PayloadSchema* notification_schema(std::uint16_t event_id) const;
};

using InterfacePtr = std::shared_ptr<const ServiceInterfaceDef>;

struct ServiceInstance {
    InterfacePtr interface;
    std::uint16_t instance_id = 0;
    Endpoint endpoint;

    std::uint16_t service_id() const { return interface->service_id; }
    bool operator==(const ServiceInstance& o) const {
        return service_id() == o.service_id() && instance_id == o.instance_id && endpoint == o.endpoint;
    }
};

enum class SdKind { offer, find, subscribe, subscribe_ack };

struct SdEntry {
    SdKind kind = SdKind::offer;
    std::uint16_t service_id = 0;
    std::uint16_t instance_id = 0;
    std::optional<std::uint16_t> event_id;
    Tick ttl = 0;
    Endpoint origin;
    Tick tick = 0;
};

struct Datagram {
    Endpoint source;
    Endpoint destination;
    Bytes payload;
    Tick sent_at = 0;
    std::uint64_t seq = 0;
};

using SubscriptionId = std::uint64_t;
inline constexpr std::uint16_t kAnyInstance = 0xFFFF;

// Centralized discovery registry plus a lossless datagram transport with a
// one-tick latency. Owned by a single scheduler; no internal locking.
class ServiceNetwork {
public:
    using SdObserver = std::function<void(const SdEntry&)>;
    using Handler = std::function<void(const Datagram&)>;

    Tick now() const { return now_; }

    /// Moves the clock forward and purges offers and subscriptions whose
    /// lifetime has ended. An offer made at t with ttl n is visible for
    /// ticks [t, t + n).
    void advance_to(Tick tick);

    void set_sd_observer(SdObserver observer) { observer_ = std::move(observer); }

    /// Re-offering from the same endpoint refreshes the lifetime. ttl 0 is a
    /// stop-offer. Throws DuplicateInstance when another endpoint holds the
    /// (service, instance) pair.
    void offer_service(const ServiceInstance& instance, Tick ttl);
    void stop_offer(std::uint16_t service_id, std::uint16_t instance_id);

    /// Unexpired matches sorted by (instance_id, endpoint). The optional
    /// origin is only used for the traced FIND entry.
    std::vector<ServiceInstance> find_service(std::uint16_t service_id, std::uint16_t instance_id = kAnyInstance,
                                              const std::optional<Endpoint>& origin = std::nullopt);

    std::vector<ServiceInstance> offers_from(const std::string& node) const;

    /// Subscribing again from the same endpoint refreshes the existing handle.
    /// Throws InstanceNotOffered, UnknownEvent.
    SubscriptionId subscribe_event(const Endpoint& subscriber, std::uint16_t service_id, std::uint16_t instance_id,
                                   std::uint16_t event_id, Tick ttl = kInfiniteTtl);
    void unsubscribe(SubscriptionId id);
    bool is_subscribed(SubscriptionId id) const;

    /// Endpoints holding an acknowledged, unexpired subscription, ascending.
    std::vector<Endpoint> subscribers(std::uint16_t service_id, std::uint16_t instance_id,
                                      std::uint16_t event_id) const;

    /// Bumped whenever the offer set changes.
    std::uint64_t registry_version() const { return registry_version_; }

    std::uint16_t allocate_client_id() { return next_client_id_++; }

    /// Queues a message for delivery at now() + 1. Asserts the header length law.
    void send_message(const Endpoint& from, const Endpoint& to, const WireMessage& msg);
    void send_datagram(const Endpoint& from, const Endpoint& to, Bytes payload);

    /// Removes every datagram due at or before now(), in send order.
    std::vector<Datagram> take_due();
    std::size_t in_flight() const { return in_flight_.size(); }

    /// Convenience driver for embedders without their own scheduler:
    /// advance one tick and hand due datagrams to bound handlers, ordered by
    /// destination node then send order. Unbound destinations are dropped.
    void bind(const Endpoint& endpoint, Handler handler);
    void unbind(const Endpoint& endpoint);
    std::size_t step();

private:
    struct Offer {
        ServiceInstance instance;
        Tick expires_at;
    };
    struct Subscription {
        Endpoint subscriber;
        std::uint16_t service_id;
        std::uint16_t instance_id;
        std::uint16_t event_id;
        Tick expires_at;
    };
    using OfferKey = std::pair<std::uint16_t, std::uint16_t>;

    void emit(SdEntry entry) const;
    void drop_subscriptions_of(const OfferKey& key);
    static Tick expiry(Tick now, Tick ttl);

    Tick now_ = 0;
    std::map<OfferKey, Offer> offers_;
    std::map<SubscriptionId, Subscription> subscriptions_;
    SubscriptionId next_subscription_ = 1;
    std::uint64_t registry_version_ = 0;
    std::uint16_t next_client_id_ = 1;
    std::deque<Datagram> in_flight_;
    std::uint64_t next_seq_ = 0;
    std::map<Endpoint, Handler> handlers_;
    SdObserver observer_;
};

// Server side of one service instance.
class Skeleton {
public:
    struct Failure {
        std::uint8_t return_code = static_cast<std::uint8_t>(ReturnCode::not_ok);
    };
    using MethodHandler = std::function<Values(const Values&)>;
    using FieldObserver = std::function<void(const FieldDef&, const Values&, std::size_t notified)>;

    Skeleton(ServiceNetwork& net, InterfacePtr interface, std::uint16_t instance_id, Endpoint endpoint);

    const ServiceInterfaceDef& interface() const { return *instance_.interface; }
    const ServiceInstance& instance() const { return instance_; }

    void offer(Tick ttl = kInfiniteTtl);
    void stop_offer();
    bool offered() const { return offered_; }

    /// One NOTIFICATION per current subscriber, returns the count.
    /// Throws UnknownEvent, SchemaMismatch.
    std::size_t publish_event(std::uint16_t event_id, const Values& values);

    /// Handlers may throw Skeleton::Failure to answer with an ERROR message.
    /// Methods without a handler echo request elements into same-named
    /// response elements.
    void set_method_handler(std::uint16_t method_id, MethodHandler handler);

    /// Server-side field access, independent of the getter/setter flags.
    const Values& field_value(std::uint16_t field_id) const;
    /// Stores the value and notifies subscribers when the field has a notifier.
    /// Returns the number of subscribers notified.
    std::size_t update_field(std::uint16_t field_id, const Values& values);
    /// Throws OperationNotSupported when the field has no notifier.
    std::size_t notify_field(std::uint16_t field_id);

    /// Invoked after every field update, local or remote.
    void set_field_observer(FieldObserver observer) { field_observer_ = std::move(observer); }

    /// Processes an incoming REQUEST / REQUEST_NO_RETURN.
    void handle(const Datagram& datagram, const WireMessage& msg);

private:
    void reply(const Datagram& datagram, const WireMessage& request, MessageType type, std::uint8_t code,
               Bytes payload);

    ServiceNetwork& net_;
    ServiceInstance instance_;
    bool offered_ = false;
    std::map<std::uint16_t, MethodHandler> handlers_;
    std::map<std::uint16_t, Values> fields_;
    FieldObserver field_observer_;
};

enum class CallStatus { pending, ok, timeout, remote_error };

struct CallResult {
    std::uint16_t session_id = 0;
    std::uint16_t method_id = 0;
    CallStatus status = CallStatus::pending;
    std::uint8_t return_code = 0;
    Values values;
    Tick sent_at = 0;
    Tick completed_at = 0;
};

struct Notification {
    std::uint16_t service_id = 0;
    std::uint16_t event_id = 0;
    Values values;
    Endpoint source;
    Tick received_at = 0;
};

// Client side bound to one discovered instance (the proxy's "handle").
class Proxy {
public:
    Proxy(ServiceNetwork& net, ServiceInstance handle, Endpoint self, Tick timeout = kDefaultMethodTimeout);

    const ServiceInstance& handle() const { return handle_; }
    std::uint16_t client_id() const { return client_id_; }
    const Endpoint& self() const { return self_; }

    /// Sends a REQUEST; the result arrives through handle()/poll_timeouts().
    /// Throws UnknownMethod, SchemaMismatch.
    std::uint16_t call_method(std::uint16_t method_id, const Values& request);

    /// Throw OperationNotSupported when the flag is absent, UnknownField for
    /// unknown ids.
    std::uint16_t field_get(std::uint16_t field_id);
    std::uint16_t field_set(std::uint16_t field_id, const Values& value);
    SubscriptionId field_notify(std::uint16_t field_id, Tick ttl = kInfiniteTtl);

    SubscriptionId subscribe_event(std::uint16_t event_id, Tick ttl = kInfiniteTtl);

    /// Incoming RESPONSE / ERROR / NOTIFICATION addressed to this proxy.
    void handle(const Datagram& datagram, const WireMessage& msg);

    /// Fails calls still pending after the timeout. Returns those results.
    std::vector<CallResult> poll_timeouts();

    const CallResult* result(std::uint16_t session_id) const;
    std::vector<CallResult> drain_completed();
    std::vector<Notification> drain_notifications();

    std::size_t outstanding() const { return outstanding_.size(); }
    std::size_t unmatched_responses() const { return unmatched_; }

private:
    std::uint16_t send_request(std::uint16_t method_id, Bytes payload);
    std::uint16_t next_session();

    ServiceNetwork& net_;
    ServiceInstance handle_;
    Endpoint self_;
    std::uint16_t client_id_;
    Tick timeout_;
    std::uint16_t session_ = 0;
    std::map<std::uint16_t, CallResult> outstanding_;
    std::map<std::uint16_t, CallResult> finished_;
    std::vector<CallResult> completed_;
    std::vector<Notification> notifications_;
    std::size_t unmatched_ = 0;
};

}  // namespace eea
