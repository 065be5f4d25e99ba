#include "eeasim/error.hpp"

namespace eea {

std::string_view to_string(Errc code) noexcept {
    switch (code) {
        case Errc::range: return "RangeError";
        case Errc::layout: return "LayoutError";
        case Errc::unknown_signal: return "UnknownSignal";
        case Errc::frame_id_mismatch: return "FrameIdMismatch";
        case Errc::length_mismatch: return "LengthMismatch";
        case Errc::not_attached: return "NotAttached";
        case Errc::truncated: return "Truncated";
        case Errc::length_field_mismatch: return "LengthFieldMismatch";
        case Errc::unknown_message_type: return "UnknownMessageType";
        case Errc::unknown_protocol_version: return "UnknownProtocolVersion";
        case Errc::invalid_definition: return "InvalidDefinition";
        case Errc::duplicate_instance: return "DuplicateInstance";
        case Errc::instance_not_offered: return "InstanceNotOffered";
        case Errc::unknown_event: return "UnknownEvent";
        case Errc::unknown_method: return "UnknownMethod";
        case Errc::unknown_field: return "UnknownField";
        case Errc::schema_mismatch: return "SchemaMismatch";
        case Errc::operation_not_supported: return "OperationNotSupported";
        case Errc::unknown_app: return "UnknownApp";
        case Errc::duplicate_app: return "DuplicateApp";
        case Errc::illegal_transition: return "IllegalTransition";
        case Errc::dependency_cycle: return "DependencyCycle";
        case Errc::invalid_manifest: return "InvalidManifest";
        case Errc::no_route: return "NoRoute";
        case Errc::unknown_frame_id: return "UnknownFrameId";
        case Errc::empty_input: return "EmptyInput";
        case Errc::parse_error: return "ParseError";
        case Errc::validation_errors: return "ValidationErrors";
        case Errc::io_error: return "IoError";
    }
    return "Unknown";
}

namespace {

std::string join_lines(const std::vector<std::string>& errors) {
    std::string out;
    for (const auto& e : errors) {
        if (!out.empty()) out += '\n';
        out += e;
    }
    return out;
}

}  // namespace

ValidationErrors::ValidationErrors(std::vector<std::string> errors)
    : Error(Errc::validation_errors, join_lines(errors)), errors_(std::move(errors)) {}

void fail(Errc code, const std::string& what) {
    throw Error(code, std::string(to_string(code)) + ": " + what);
}

}  // namespace eea
