#include "eeasim/wire.hpp"

#include "eeasim/error.hpp"

namespace eea {

namespace {

void put_u16(Bytes& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

void put_u32(Bytes& out, std::uint32_t v) {
    put_u16(out, static_cast<std::uint16_t>(v >> 16));
    put_u16(out, static_cast<std::uint16_t>(v));
}

std::uint16_t get_u16(std::span<const std::uint8_t> in, std::size_t at) {
    return static_cast<std::uint16_t>((in[at] << 8) | in[at + 1]);
}

std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t at) {
    return (std::uint32_t{get_u16(in, at)} << 16) | get_u16(in, at + 2);
}

}  // namespace

bool is_known_message_type(std::uint8_t raw) noexcept {
    switch (static_cast<MessageType>(raw)) {
        case MessageType::request:
        case MessageType::request_no_return:
        case MessageType::notification:
        case MessageType::response:
        case MessageType::error:
            return true;
    }
    return false;
}

Bytes encode_message(const WireMessage& msg) {
    Bytes out;
    out.reserve(kHeaderSize + msg.payload.size());
    put_u16(out, msg.service_id);
    put_u16(out, msg.method_id);
    put_u32(out, msg.length());
    put_u16(out, msg.client_id);
    put_u16(out, msg.session_id);
    out.push_back(msg.protocol_version);
    out.push_back(msg.interface_version);
    out.push_back(static_cast<std::uint8_t>(msg.message_type));
    out.push_back(msg.return_code);
    out.insert(out.end(), msg.payload.begin(), msg.payload.end());
    return out;
}

WireMessage decode_message(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kHeaderSize) {
        fail(Errc::truncated, std::to_string(bytes.size()) + " bytes, header needs 16");
    }
    const std::uint32_t length = get_u32(bytes, 4);
    if (length < kLengthCoveredHeader || std::uint64_t{length} + 8 != bytes.size()) {
        fail(Errc::length_field_mismatch,
             "length field " + std::to_string(length) + " but " + std::to_string(bytes.size()) + " bytes present");
    }
    WireMessage msg;
    msg.service_id = get_u16(bytes, 0);
    msg.method_id = get_u16(bytes, 2);
    msg.client_id = get_u16(bytes, 8);
    msg.session_id = get_u16(bytes, 10);
    msg.protocol_version = bytes[12];
    msg.interface_version = bytes[13];
    if (msg.protocol_version != kProtocolVersion) {
        fail(Errc::unknown_protocol_version, "protocol version " + std::to_string(msg.protocol_version));
    }
    if (!is_known_message_type(bytes[14])) {
        fail(Errc::unknown_message_type, "message type " + std::to_string(bytes[14]));
    }
    msg.message_type = static_cast<MessageType>(bytes[14]);
    msg.return_code = bytes[15];
    msg.payload.assign(bytes.begin() + kHeaderSize, bytes.end());
    return msg;
}

}  // namespace eea
