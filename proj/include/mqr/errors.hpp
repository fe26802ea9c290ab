#pragma once

#include <stdexcept>
#include <string>

namespace mqr {

/// File or directory could not be read/written.
struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A record in an input file is malformed (message carries the line number).
struct parse_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Loaded data violates a dataset invariant (duplicate id, dangling gold id, ...).
struct validation_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A configuration field is out of its legal range.
struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A pipeline phase was invoked before the artifact it depends on exists.
struct dependency_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace mqr
