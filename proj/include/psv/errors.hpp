#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace psv {

// Base for everything thrown by the library.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad input to a rule/spec parser; carries the offending position.
struct parse_error : error {
    parse_error(const std::string& msg, std::size_t position)
        : error(msg + " (at position " + std::to_string(position) + ")"),
          pos(position) {}
    std::size_t pos;
};

struct io_error : error {
    using error::error;
};

struct checksum_error : io_error {
    using io_error::io_error;
};

struct rule_mismatch_error : io_error {
    using io_error::io_error;
};

// A lemma hypothesis does not hold for the requested instance.
struct hypothesis_error : error {
    using error::error;
};

// Requested computation would exceed a configured memory/size cap.
struct resource_error : error {
    using error::error;
};

struct convergence_error : error {
    using error::error;
};

}  // namespace psv
