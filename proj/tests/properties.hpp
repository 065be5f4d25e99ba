#pragma once

// Randomized property checks shared by the unit tests and the acceptance
// binary. Each returns an empty string on success or a description of the
// first violation.

#include <algorithm>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "eeasim/error.hpp"
#include "eeasim/service.hpp"

namespace props {

inline eea::InterfacePtr echo_interface() {
    auto def = std::make_shared<eea::ServiceInterfaceDef>();
    def->name = "Probe";
    def->service_id = 0x4242;
    def->events.push_back({0x8001, "Tick", eea::PayloadSchema{{{"n", eea::Primitive::u32}}}});
    def->methods.push_back({0x0001, "Echo", eea::PayloadSchema{{{"x", eea::Primitive::u32}}},
                            eea::PayloadSchema{{{"x", eea::Primitive::u32}}}});
    return def;
}

// Drives one provider and four would-be subscribers through random offer,
// stop-offer, subscribe, unsubscribe and publish operations. A reference
// model tracks which subscriptions are acknowledged and unexpired; every
// publish must reach exactly that set.
inline std::string check_subscription_soundness(std::uint64_t seed, int steps) {
    using namespace eea;
    std::mt19937_64 rng(seed);
    ServiceNetwork net;
    const auto iface = echo_interface();
    const Endpoint server{"srv", 30490};
    Skeleton skel(net, iface, 1, server);
    constexpr int kClients = 4;
    std::vector<Endpoint> clients;
    std::vector<std::unique_ptr<Proxy>> proxies;
    for (int i = 0; i < kClients; ++i) {
        clients.push_back({"c" + std::to_string(i), 30490});
        proxies.push_back(std::make_unique<Proxy>(net, ServiceInstance{iface, 1, server}, clients.back()));
    }

    std::optional<Tick> offer_expiry;                // model: offer visible while now < expiry
    std::map<int, Tick> sub_expiry;                   // model: client -> expiry
    std::map<int, SubscriptionId> handles;
    std::map<std::uint32_t, std::set<int>> expected;  // publish token -> recipients
    std::map<std::uint32_t, std::set<int>> received;
    std::uint32_t token = 0;
    std::ostringstream err;

    auto ttl_draw = [&]() -> Tick {
        const auto r = rng() % 10;
        if (r == 0) return kInfiniteTtl;
        return 1 + rng() % 12;
    };
    auto expiry_of = [](Tick now, Tick ttl) {
        return ttl >= kInfiniteTtl ? std::numeric_limits<Tick>::max() : now + ttl;
    };

    for (Tick now = 0; now < static_cast<Tick>(steps); ++now) {
        net.advance_to(now);
        if (offer_expiry && *offer_expiry <= now) {
            offer_expiry.reset();
            sub_expiry.clear();
        }
        std::erase_if(sub_expiry, [&](const auto& kv) { return kv.second <= now; });

        for (auto& d : net.take_due()) {
            const auto msg = decode_message(d.payload);
            if (msg.message_type != MessageType::notification) continue;
            const int who = d.destination.node[1] - '0';
            proxies[static_cast<std::size_t>(who)]->handle(d, msg);
            for (const auto& n : proxies[static_cast<std::size_t>(who)]->drain_notifications()) {
                if (n.received_at != now || d.sent_at + 1 != now) {
                    err << "notification delivered off the one-tick latency at tick " << now;
                    return err.str();
                }
                received[static_cast<std::uint32_t>(n.values.at("n"))].insert(who);
            }
        }

        const int ops = 1 + static_cast<int>(rng() % 3);
        for (int op = 0; op < ops; ++op) {
            const auto kind = rng() % 10;
            const int c = static_cast<int>(rng() % kClients);
            if (kind == 0) {
                const Tick ttl = ttl_draw();
                skel.offer(ttl);
                offer_expiry = expiry_of(now, ttl);
            } else if (kind == 1) {
                skel.stop_offer();
                offer_expiry.reset();
                sub_expiry.clear();
            } else if (kind <= 4) {
                const Tick ttl = ttl_draw();
                try {
                    handles[c] = proxies[static_cast<std::size_t>(c)]->subscribe_event(0x8001, ttl);
                    if (!offer_expiry) {
                        err << "subscribe accepted without an offer at tick " << now;
                        return err.str();
                    }
                    sub_expiry[c] = expiry_of(now, ttl);
                } catch (const Error& e) {
                    if (e.code() != Errc::instance_not_offered || offer_expiry) {
                        err << "unexpected subscribe failure at tick " << now << ": " << e.what();
                        return err.str();
                    }
                }
            } else if (kind == 5) {
                if (handles.contains(c)) net.unsubscribe(handles[c]);
                handles.erase(c);
                sub_expiry.erase(c);
            } else {
                std::set<int> want;
                for (const auto& [client, exp] : sub_expiry) want.insert(client);
                const auto n = skel.publish_event(0x8001, {{"n", static_cast<double>(token)}});
                if (n != want.size()) {
                    err << "publish at tick " << now << " notified " << n << ", model expects " << want.size();
                    return err.str();
                }
                expected[token++] = want;
            }
        }
    }
    net.advance_to(static_cast<Tick>(steps) + 1);
    for (auto& d : net.take_due()) {
        const auto msg = decode_message(d.payload);
        const int who = d.destination.node[1] - '0';
        proxies[static_cast<std::size_t>(who)]->handle(d, msg);
        for (const auto& n : proxies[static_cast<std::size_t>(who)]->drain_notifications()) {
            received[static_cast<std::uint32_t>(n.values.at("n"))].insert(who);
        }
    }
    for (const auto& [t, want] : expected) {
        const auto it = received.find(t);
        const std::set<int> got = it == received.end() ? std::set<int>{} : it->second;
        if (got != want) {
            err << "publish " << t << " reached " << got.size() << " subscribers, model expects " << want.size();
            return err.str();
        }
    }
    for (const auto& [t, got] : received) {
        if (!expected.contains(t)) return "notification for an unknown publish";
    }
    return {};
}

// Issues a batch of concurrent calls, lets the server answer them in a
// shuffled order, then feeds the proxy the shuffled responses mixed with
// duplicates and forged responses. Every call must complete exactly once
// with its own echoed value; everything else must be counted as unmatched.
inline std::string check_correlation(std::uint64_t seed, int rounds) {
    using namespace eea;
    std::mt19937_64 rng(seed);
    ServiceNetwork net;
    const auto iface = echo_interface();
    const Endpoint server{"srv", 30490};
    const Endpoint self{"cli", 30490};
    Skeleton skel(net, iface, 1, server);
    skel.offer();
    Proxy proxy(net, ServiceInstance{iface, 1, server}, self, 1'000'000);
    Tick now = 0;
    std::ostringstream err;

    for (int round = 0; round < rounds; ++round) {
        const int calls = 1 + static_cast<int>(rng() % 12);
        std::map<std::uint16_t, double> sent;
        for (int i = 0; i < calls; ++i) {
            const double x = static_cast<double>(rng() % 1'000'000);
            const auto session = proxy.call_method(0x0001, {{"x", x}});
            if (sent.contains(session)) return "session id reused while outstanding";
            sent[session] = x;
        }
        net.advance_to(++now);
        auto requests = net.take_due();
        std::shuffle(requests.begin(), requests.end(), rng);
        for (const auto& d : requests) skel.handle(d, decode_message(d.payload));

        net.advance_to(++now);
        auto responses = net.take_due();
        std::vector<std::pair<Datagram, WireMessage>> inbox;
        std::size_t forged = 0;
        for (const auto& d : responses) inbox.emplace_back(d, decode_message(d.payload));
        const auto genuine = inbox.size();
        for (std::size_t i = 0; i < genuine; ++i) {
            auto copy = inbox[i];
            switch (rng() % 4) {
                case 0: break;  // plain duplicate
                case 1: copy.second.client_id = static_cast<std::uint16_t>(copy.second.client_id + 1); break;
                case 2: copy.second.session_id = static_cast<std::uint16_t>(copy.second.session_id + 0x4000); break;
                default: copy.second.method_id = 0x0002; break;
            }
            inbox.push_back(copy);
            ++forged;
        }
        std::shuffle(inbox.begin(), inbox.end(), rng);
        const auto unmatched_before = proxy.unmatched_responses();
        for (const auto& [d, msg] : inbox) proxy.handle(d, msg);

        const auto done = proxy.drain_completed();
        std::map<std::uint16_t, int> seen;
        for (const auto& r : done) {
            if (!sent.contains(r.session_id)) return "completion for a session that was never sent";
            if (++seen[r.session_id] > 1) return "call completed twice";
            if (r.status != CallStatus::ok) return "call did not complete ok";
            if (r.values.at("x") != sent[r.session_id]) {
                err << "session " << r.session_id << " got another call's response";
                return err.str();
            }
        }
        if (seen.size() != sent.size()) return "not every call completed";
        if (proxy.outstanding() != 0) return "calls left outstanding";
        if (proxy.unmatched_responses() - unmatched_before != forged) {
            err << "expected " << forged << " unmatched responses, counted "
                << proxy.unmatched_responses() - unmatched_before;
            return err.str();
        }
    }
    return {};
}

}  // namespace props
