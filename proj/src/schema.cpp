#include "eeasim/schema.hpp"

#include <bit>
#include <cmath>
#include <cstring>

#include "eeasim/error.hpp"

namespace eea {

namespace {

void put_le(Bytes& out, std::uint64_t bits, std::size_t size) {
    for (std::size_t i = 0; i < size; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

std::uint64_t get_le(std::span<const std::uint8_t> in, std::size_t at, std::size_t size) {
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < size; ++i) bits |= std::uint64_t{in[at + i]} << (8 * i);
    return bits;
}

struct IntRange {
    double lo;
    double hi;  // exclusive
};

IntRange range_of(Primitive p) {
    switch (p) {
        case Primitive::u8: return {0, 256.0};
        case Primitive::u16: return {0, 65536.0};
        case Primitive::u32: return {0, std::ldexp(1.0, 32)};
        case Primitive::u64: return {0, std::ldexp(1.0, 64)};
        case Primitive::i8: return {-128.0, 128.0};
        case Primitive::i16: return {-32768.0, 32768.0};
        case Primitive::i32: return {-std::ldexp(1.0, 31), std::ldexp(1.0, 31)};
        case Primitive::i64: return {-std::ldexp(1.0, 63), std::ldexp(1.0, 63)};
        default: return {0, 0};
    }
}

bool is_signed_integer(Primitive p) {
    return p == Primitive::i8 || p == Primitive::i16 || p == Primitive::i32 || p == Primitive::i64;
}

}  // namespace

std::size_t size_of(Primitive p) noexcept {
    switch (p) {
        case Primitive::u8:
        case Primitive::i8: return 1;
        case Primitive::u16:
        case Primitive::i16: return 2;
        case Primitive::u32:
        case Primitive::i32:
        case Primitive::f32: return 4;
        case Primitive::u64:
        case Primitive::i64:
        case Primitive::f64: return 8;
    }
    return 0;
}

std::string_view to_string(Primitive p) noexcept {
    switch (p) {
        case Primitive::u8: return "u8";
        case Primitive::u16: return "u16";
        case Primitive::u32: return "u32";
        case Primitive::u64: return "u64";
        case Primitive::i8: return "i8";
        case Primitive::i16: return "i16";
        case Primitive::i32: return "i32";
        case Primitive::i64: return "i64";
        case Primitive::f32: return "f32";
        case Primitive::f64: return "f64";
    }
    return "?";
}

std::optional<Primitive> parse_primitive(std::string_view name) noexcept {
    for (auto p : {Primitive::u8, Primitive::u16, Primitive::u32, Primitive::u64, Primitive::i8, Primitive::i16,
                   Primitive::i32, Primitive::i64, Primitive::f32, Primitive::f64}) {
        if (to_string(p) == name) return p;
    }
    return std::nullopt;
}

bool is_integer(Primitive p) noexcept { return p != Primitive::f32 && p != Primitive::f64; }

double PayloadSchema::coerce(Primitive type, double value, std::string_view element) {
    if (type == Primitive::f64) return value;
    if (type == Primitive::f32) return static_cast<double>(static_cast<float>(value));
    const double rounded = std::round(value);
    const auto r = range_of(type);
    if (!std::isfinite(rounded) || rounded < r.lo || rounded >= r.hi) {
        fail(Errc::schema_mismatch, "value " + std::to_string(value) + " does not fit " +
                                        std::string(to_string(type)) + " element '" + std::string(element) + "'");
    }
    return rounded;
}

std::size_t PayloadSchema::serialized_size() const {
    std::size_t total = 0;
    for (const auto& e : elements) total += size_of(e.type);
    return total;
}

Bytes PayloadSchema::serialize(const Values& values) const {
    if (values.size() != elements.size()) {
        fail(Errc::schema_mismatch,
             std::to_string(values.size()) + " values for " + std::to_string(elements.size()) + " elements");
    }
    Bytes out;
    out.reserve(serialized_size());
    for (const auto& e : elements) {
        const auto it = values.find(e.name);
        if (it == values.end()) fail(Errc::schema_mismatch, "missing value for element '" + e.name + "'");
        const double v = coerce(e.type, it->second, e.name);
        std::uint64_t bits = 0;
        if (e.type == Primitive::f64) {
            bits = std::bit_cast<std::uint64_t>(v);
        } else if (e.type == Primitive::f32) {
            bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
        } else if (is_signed_integer(e.type)) {
            bits = static_cast<std::uint64_t>(static_cast<std::int64_t>(v));
        } else {
            bits = static_cast<std::uint64_t>(v);
        }
        put_le(out, bits, size_of(e.type));
    }
    return out;
}

Values PayloadSchema::deserialize(std::span<const std::uint8_t> bytes) const {
    if (bytes.size() != serialized_size()) {
        fail(Errc::schema_mismatch,
             std::to_string(bytes.size()) + " payload bytes, schema needs " + std::to_string(serialized_size()));
    }
    Values values;
    std::size_t at = 0;
    for (const auto& e : elements) {
        const auto size = size_of(e.type);
        const auto bits = get_le(bytes, at, size);
        at += size;
        double v = 0;
        switch (e.type) {
            case Primitive::f64: v = std::bit_cast<double>(bits); break;
            case Primitive::f32: v = std::bit_cast<float>(static_cast<std::uint32_t>(bits)); break;
            case Primitive::i8: v = static_cast<std::int8_t>(bits); break;
            case Primitive::i16: v = static_cast<std::int16_t>(bits); break;
            case Primitive::i32: v = static_cast<std::int32_t>(bits); break;
            case Primitive::i64: v = static_cast<double>(static_cast<std::int64_t>(bits)); break;
            default: v = static_cast<double>(bits); break;
        }
        values.emplace(e.name, v);
    }
    return values;
}

}  // namespace eea
