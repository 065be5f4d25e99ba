#include "eeasim/signal.hpp"

#include <algorithm>
#include <bitset>
#include <cmath>

#include "eeasim/error.hpp"

namespace eea {

namespace {

constexpr std::uint32_t kMaxStartBit = kMaxPayloadLength * 8 - 1;

bool test_bit(std::span<const std::uint8_t> payload, std::uint32_t pos) {
    return (payload[pos / 8] >> (pos % 8)) & 1U;
}

void put_bit(std::span<std::uint8_t> payload, std::uint32_t pos, bool value) {
    const auto mask = static_cast<std::uint8_t>(1U << (pos % 8));
    if (value) {
        payload[pos / 8] |= mask;
    } else {
        payload[pos / 8] &= static_cast<std::uint8_t>(~mask);
    }
}

void check_span(std::size_t payload_size, const SignalDef& sig) {
    const auto needed = sig.required_bytes();
    if (needed > payload_size) {
        fail(Errc::layout, "signal '" + sig.name + "' needs " + std::to_string(needed) +
                               " bytes, payload has " + std::to_string(payload_size));
    }
}

}  // namespace

std::vector<std::uint32_t> SignalDef::bit_positions() const {
    std::vector<std::uint32_t> positions;
    positions.reserve(bit_length);
    if (byte_order == ByteOrder::little_endian) {
        for (std::uint32_t i = 0; i < bit_length; ++i) positions.push_back(start_bit + i);
        return positions;
    }
    // Motorola sawtooth: walk from the MSB towards bit 0 of the byte, then
    // continue at bit 7 of the following byte.
    std::uint32_t pos = start_bit;
    for (std::uint32_t i = 0; i < bit_length; ++i) {
        positions.push_back(pos);
        pos = (pos % 8 == 0) ? pos + 15 : pos - 1;
    }
    std::reverse(positions.begin(), positions.end());
    return positions;
}

std::size_t SignalDef::required_bytes() const {
    const auto positions = bit_positions();
    const auto top = *std::max_element(positions.begin(), positions.end());
    return top / 8 + 1;
}

void SignalDef::validate() const {
    if (name.empty()) fail(Errc::layout, "signal without a name");
    if (bit_length < 1 || bit_length > 64) {
        fail(Errc::layout, "signal '" + name + "' bit_length " + std::to_string(bit_length) +
                               " outside [1, 64]");
    }
    if (start_bit > kMaxStartBit) {
        fail(Errc::layout, "signal '" + name + "' start_bit " + std::to_string(start_bit) +
                               " outside [0, 511]");
    }
    if (scale == 0.0 || !std::isfinite(scale)) fail(Errc::range, "signal '" + name + "' has zero scale");
    if (!std::isfinite(offset)) fail(Errc::range, "signal '" + name + "' has non-finite offset");
}

const SignalDef* FrameDef::find_signal(std::string_view name) const {
    for (const auto& s : signals) {
        if (s.name == name) return &s;
    }
    return nullptr;
}

void FrameDef::validate() const {
    if (frame_id > kMaxFrameId) fail(Errc::range, "frame id exceeds 29 bits");
    if (payload_length < 1 || payload_length > kMaxPayloadLength) {
        fail(Errc::layout, "payload_length " + std::to_string(payload_length) + " outside [1, 64]");
    }
    std::bitset<kMaxPayloadLength * 8> used;
    for (std::size_t i = 0; i < signals.size(); ++i) {
        const auto& sig = signals[i];
        sig.validate();
        for (std::size_t j = 0; j < i; ++j) {
            if (signals[j].name == sig.name) fail(Errc::layout, "duplicate signal '" + sig.name + "'");
        }
        check_span(payload_length, sig);
        for (auto pos : sig.bit_positions()) {
            if (used.test(pos)) fail(Errc::layout, "signal '" + sig.name + "' overlaps another signal");
            used.set(pos);
        }
    }
}

double quantize(const SignalDef& sig, double physical) {
    return std::round((physical - sig.offset) / sig.scale) * sig.scale + sig.offset;
}

void pack_raw(std::span<std::uint8_t> payload, const SignalDef& sig, std::uint64_t raw) {
    check_span(payload.size(), sig);
    const auto positions = sig.bit_positions();
    for (std::size_t i = 0; i < positions.size(); ++i) {
        put_bit(payload, positions[i], (raw >> i) & 1U);
    }
}

std::uint64_t unpack_raw(std::span<const std::uint8_t> payload, const SignalDef& sig) {
    check_span(payload.size(), sig);
    const auto positions = sig.bit_positions();
    std::uint64_t raw = 0;
    for (std::size_t i = 0; i < positions.size(); ++i) {
        if (test_bit(payload, positions[i])) raw |= std::uint64_t{1} << i;
    }
    return raw;
}

Bytes pack_signal(std::span<const std::uint8_t> payload, const SignalDef& sig, double physical) {
    sig.validate();
    check_span(payload.size(), sig);

    const double raw = std::round((physical - sig.offset) / sig.scale);
    const double span = std::ldexp(1.0, static_cast<int>(sig.bit_length));
    const bool is_signed = sig.value_kind == ValueKind::signed_int;
    const double lo = is_signed ? -span / 2 : 0.0;
    const double hi = is_signed ? span / 2 : span;  // exclusive
    if (!std::isfinite(raw) || raw < lo || raw >= hi) {
        fail(Errc::range, "value " + std::to_string(physical) + " does not fit signal '" + sig.name + "'");
    }

    std::uint64_t bits = 0;
    if (is_signed) {
        bits = static_cast<std::uint64_t>(static_cast<std::int64_t>(raw));
    } else {
        bits = static_cast<std::uint64_t>(raw);
    }

    Bytes out(payload.begin(), payload.end());
    pack_raw(out, sig, bits);
    return out;
}

double unpack_signal(std::span<const std::uint8_t> payload, const SignalDef& sig) {
    sig.validate();
    const std::uint64_t raw = unpack_raw(payload, sig);
    if (sig.value_kind == ValueKind::signed_int) {
        std::int64_t value = 0;
        if (sig.bit_length == 64) {
            value = static_cast<std::int64_t>(raw);
        } else if ((raw >> (sig.bit_length - 1)) & 1U) {
            value = static_cast<std::int64_t>(raw | (~std::uint64_t{0} << sig.bit_length));
        } else {
            value = static_cast<std::int64_t>(raw);
        }
        return static_cast<double>(value) * sig.scale + sig.offset;
    }
    return static_cast<double>(raw) * sig.scale + sig.offset;
}

BusFrame encode_frame(const FrameDef& def, const SignalValues& values) {
    BusFrame frame;
    frame.frame_id = def.frame_id;
    frame.payload.assign(def.payload_length, 0);
    for (const auto& [name, value] : values) {
        const auto* sig = def.find_signal(name);
        if (sig == nullptr) {
            fail(Errc::unknown_signal, "frame " + std::to_string(def.frame_id) + " has no signal '" + name + "'");
        }
        frame.payload = pack_signal(frame.payload, *sig, value);
    }
    return frame;
}

SignalValues decode_frame(const FrameDef& def, const BusFrame& frame) {
    if (frame.frame_id != def.frame_id) {
        fail(Errc::frame_id_mismatch,
             "frame " + std::to_string(frame.frame_id) + " decoded with definition " + std::to_string(def.frame_id));
    }
    if (frame.payload.size() != def.payload_length) {
        fail(Errc::length_mismatch, "payload of " + std::to_string(frame.payload.size()) + " bytes, expected " +
                                        std::to_string(def.payload_length));
    }
    SignalValues values;
    for (const auto& sig : def.signals) values.emplace(sig.name, unpack_signal(frame.payload, sig));
    return values;
}

std::uint64_t VirtualBus::send(BusFrame frame) {
    if (!is_attached(frame.sender)) {
        fail(Errc::not_attached, "node '" + frame.sender + "' is not attached to bus '" + name_ + "'");
    }
    const auto seq = next_seq_++;
    in_flight_.push_back({std::move(frame), seq});
    return seq;
}

std::vector<BusDelivery> VirtualBus::take_due(Tick now) {
    std::vector<BusDelivery> out;
    while (!in_flight_.empty() && in_flight_.front().frame.sent_at + kLatency <= now) {
        auto pending = std::move(in_flight_.front());
        in_flight_.pop_front();
        for (const auto& node : attached_) {
            if (node == pending.frame.sender) continue;
            out.push_back({node, pending.frame, pending.seq});
        }
    }
    return out;
}

}  // namespace eea
