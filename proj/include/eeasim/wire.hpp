#pragma once

#include <cstdint>
#include <span>

#include "eeasim/types.hpp"

namespace eea {

enum class MessageType : std::uint8_t {
    request = 0x00,
    request_no_return = 0x01,
    notification = 0x02,
    response = 0x80,
    error = 0x81,
};

// SOME/IP return codes. The header carries the raw byte, so values outside
// this list still round-trip.
enum class ReturnCode : std::uint8_t {
    ok = 0x00,
    not_ok = 0x01,
    unknown_service = 0x02,
    unknown_method = 0x03,
    not_ready = 0x04,
    not_reachable = 0x05,
    timeout = 0x06,
    wrong_protocol_version = 0x07,
    wrong_interface_version = 0x08,
    malformed_message = 0x09,
    wrong_message_type = 0x0A,
};

inline constexpr std::size_t kHeaderSize = 16;
inline constexpr std::uint8_t kProtocolVersion = 1;
// Bytes covered by the length field before the payload starts.
inline constexpr std::uint32_t kLengthCoveredHeader = 8;

struct WireMessage {
    std::uint16_t service_id = 0;
    std::uint16_t method_id = 0;
    std::uint16_t client_id = 0;
    std::uint16_t session_id = 0;
    std::uint8_t protocol_version = kProtocolVersion;
    std::uint8_t interface_version = 1;
    MessageType message_type = MessageType::request;
    std::uint8_t return_code = 0;
    Bytes payload;

    std::uint32_t length() const { return kLengthCoveredHeader + static_cast<std::uint32_t>(payload.size()); }

    bool operator==(const WireMessage&) const = default;
};

bool is_known_message_type(std::uint8_t raw) noexcept;

/// 16-byte big-endian header followed by the payload verbatim.
Bytes encode_message(const WireMessage& msg);

/// Errors: Truncated, LengthFieldMismatch, UnknownProtocolVersion,
/// UnknownMessageType.
WireMessage decode_message(std::span<const std::uint8_t> bytes);

}  // namespace eea
