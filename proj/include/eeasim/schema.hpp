#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eeasim/types.hpp"

namespace eea {

enum class Primitive { u8, u16, u32, u64, i8, i16, i32, i64, f32, f64 };

std::size_t size_of(Primitive p) noexcept;
std::string_view to_string(Primitive p) noexcept;
std::optional<Primitive> parse_primitive(std::string_view name) noexcept;
bool is_integer(Primitive p) noexcept;

using Values = std::map<std::string, double>;

struct SchemaElement {
    std::string name;
    Primitive type = Primitive::u32;

    bool operator==(const SchemaElement&) const = default;
};

// Flat record of primitives, little-endian, no padding.
struct PayloadSchema {
    std::vector<SchemaElement> elements;

    std::size_t serialized_size() const;

    /// Values must name exactly the schema's elements. Integer elements take
    /// the value rounded half away from zero and range-checked.
    /// Throws SchemaMismatch.
    Bytes serialize(const Values& values) const;

    /// Throws SchemaMismatch when the byte count differs from serialized_size().
    Values deserialize(std::span<const std::uint8_t> bytes) const;

    /// Value a single element would carry on the wire; throws SchemaMismatch
    /// if it is not representable.
    static double coerce(Primitive type, double value, std::string_view element);

    bool operator==(const PayloadSchema&) const = default;
};

}  // namespace eea
