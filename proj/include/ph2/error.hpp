#pragma once

#include <stdexcept>
#include <string>

namespace ph2 {

// Error kinds surfaced by the CLI as "ERROR:<kind>:".
enum class errc {
    invalid_input,
    insufficient_data,
    invalid_state,
    io_error,
    corrupt_model,
    config_error,
};

inline const char* errc_name(errc k) {
    switch (k) {
        case errc::invalid_input: return "InvalidInput";
        case errc::insufficient_data: return "InsufficientData";
        case errc::invalid_state: return "InvalidState";
        case errc::io_error: return "IOError";
        case errc::corrupt_model: return "CorruptModel";
        case errc::config_error: return "ConfigError";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(errc kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
    errc kind() const { return kind_; }
    const char* kind_name() const { return errc_name(kind_); }

private:
    errc kind_;
};

[[noreturn]] inline void throw_invalid_input(const std::string& msg) {
    throw Error(errc::invalid_input, msg);
}
[[noreturn]] inline void throw_insufficient_data(const std::string& msg) {
    throw Error(errc::insufficient_data, msg);
}
[[noreturn]] inline void throw_invalid_state(const std::string& msg) {
    throw Error(errc::invalid_state, msg);
}
[[noreturn]] inline void throw_io_error(const std::string& msg) {
    throw Error(errc::io_error, msg);
}
[[noreturn]] inline void throw_corrupt_model(const std::string& msg) {
    throw Error(errc::corrupt_model, msg);
}
[[noreturn]] inline void throw_config_error(const std::string& msg) {
    throw Error(errc::config_error, msg);
}

} // namespace ph2
