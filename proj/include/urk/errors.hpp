#pragma once

#include <stdexcept>
#include <string>

namespace urk {

// Invalid argument / violated parameter constraint. The message names the
// violated constraint so callers (and the CLI) can surface it verbatim.
struct param_error : std::invalid_argument {
    explicit param_error(const std::string& what) : std::invalid_argument(what) {}
};

// Malformed serialized input: bad magic, truncation, out-of-range field.
struct format_error : std::runtime_error {
    explicit format_error(const std::string& what) : std::runtime_error(what) {}
};

// A requested exhaustive computation exceeds its configured search limit.
// Distinct from a negative answer: the computation was not performed.
struct refusal_error : std::runtime_error {
    explicit refusal_error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace urk
