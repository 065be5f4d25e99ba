#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <vector>

namespace eea {

using Bytes = std::vector<std::uint8_t>;
using Tick = std::uint64_t;

// Network address of a service-side endpoint: owning node plus UDP-style port.
struct Endpoint {
    std::string node;
    std::uint16_t port = 0;

    auto operator<=>(const Endpoint&) const = default;
    bool operator==(const Endpoint&) const = default;

    std::string to_string() const { return node + ":" + std::to_string(port); }
};

std::string to_hex(const Bytes& bytes);
Bytes from_hex(std::string_view hex);

}  // namespace eea
