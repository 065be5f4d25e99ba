#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace eea {

enum class Errc {
    range,
    layout,
    unknown_signal,
    frame_id_mismatch,
    length_mismatch,
    not_attached,
    truncated,
    length_field_mismatch,
    unknown_message_type,
    unknown_protocol_version,
    invalid_definition,
    duplicate_instance,
    instance_not_offered,
    unknown_event,
    unknown_method,
    unknown_field,
    schema_mismatch,
    operation_not_supported,
    unknown_app,
    duplicate_app,
    illegal_transition,
    dependency_cycle,
    invalid_manifest,
    no_route,
    unknown_frame_id,
    empty_input,
    parse_error,
    validation_errors,
    io_error,
};

std::string_view to_string(Errc code) noexcept;

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

// Carries every problem found, not just the first.
class ValidationErrors : public Error {
public:
    explicit ValidationErrors(std::vector<std::string> errors);

    const std::vector<std::string>& errors() const noexcept { return errors_; }

private:
    std::vector<std::string> errors_;
};

[[noreturn]] void fail(Errc code, const std::string& what);

}  // namespace eea
