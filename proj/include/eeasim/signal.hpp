#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "eeasim/types.hpp"

namespace eea {

enum class ByteOrder { little_endian, big_endian };
enum class ValueKind { unsigned_int, signed_int };

inline constexpr std::uint32_t kMaxFrameId = 0x1FFFFFFF;
inline constexpr std::size_t kMaxPayloadLength = 64;

// Little-endian signals use LSB0 numbering with start_bit at the LSB.
// Big-endian signals use DBC (Motorola) numbering with start_bit at the MSB.
struct SignalDef {
    std::string name;
    std::uint32_t start_bit = 0;
    std::uint32_t bit_length = 8;
    ByteOrder byte_order = ByteOrder::little_endian;
    ValueKind value_kind = ValueKind::unsigned_int;
    double scale = 1.0;
    double offset = 0.0;

    /// Payload bit positions occupied by the signal, LSB of the raw value first.
    /// Position p addresses byte p / 8, bit p % 8 (bit 0 = least significant).
    std::vector<std::uint32_t> bit_positions() const;

    /// Smallest payload size in bytes that holds the signal.
    std::size_t required_bytes() const;

    void validate() const;
};

struct FrameDef {
    std::uint32_t frame_id = 0;
    std::size_t payload_length = 8;
    std::vector<SignalDef> signals;
    std::optional<Tick> cycle_time;  // empty = event-driven

    const SignalDef* find_signal(std::string_view name) const;

    /// Throws LayoutError/RangeError on bad ids, lengths, overlaps or
    /// signals that do not fit.
    void validate() const;
};

struct BusFrame {
    std::uint32_t frame_id = 0;
    Bytes payload;
    Tick sent_at = 0;
    std::string sender;

    bool operator==(const BusFrame&) const = default;
};

using SignalValues = std::map<std::string, double>;

/// Round-half-away-from-zero conversion onto the raw grid.
double quantize(const SignalDef& sig, double physical);

Bytes pack_signal(std::span<const std::uint8_t> payload, const SignalDef& sig, double physical);
double unpack_signal(std::span<const std::uint8_t> payload, const SignalDef& sig);

/// Raw-level access, used by the physical-value helpers above.
void pack_raw(std::span<std::uint8_t> payload, const SignalDef& sig, std::uint64_t raw);
std::uint64_t unpack_raw(std::span<const std::uint8_t> payload, const SignalDef& sig);

BusFrame encode_frame(const FrameDef& def, const SignalValues& values);
SignalValues decode_frame(const FrameDef& def, const BusFrame& frame);

struct BusDelivery {
    std::string receiver;
    BusFrame frame;
    std::uint64_t bus_seq = 0;
};

// Lossless broadcast medium with a fixed one-tick latency. Every attached
// node other than the sender receives every frame, FIFO per sender.
class VirtualBus {
public:
    static constexpr Tick kLatency = 1;

    explicit VirtualBus(std::string name) : name_(std::move(name)) {}

    const std::string& name() const { return name_; }
    const std::set<std::string>& attached_nodes() const { return attached_; }

    void attach(const std::string& node) { attached_.insert(node); }
    bool is_attached(const std::string& node) const { return attached_.contains(node); }

    /// Returns the bus sequence number assigned to the frame.
    std::uint64_t send(BusFrame frame);

    /// Removes and returns every delivery due at or before `now`, in send
    /// order, receivers ascending within a frame.
    std::vector<BusDelivery> take_due(Tick now);

    std::size_t in_flight() const { return in_flight_.size(); }

private:
    struct Pending {
        BusFrame frame;
        std::uint64_t seq;
    };

    std::string name_;
    std::set<std::string> attached_;
    std::deque<Pending> in_flight_;
    std::uint64_t next_seq_ = 0;
};

}  // namespace eea
