// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace graphfree {

// Error categories mirror the C API status codes so exceptions can cross the
// boundary losslessly.
enum class errc {
    argument = 1,   // bad in-process argument (null, shape mismatch, range)
    config = 2,     // invalid or inconsistent run configuration
    io = 3,         // file or directory not readable/writable
    format = 4,     // file exists but does not parse
    numeric = 5,    // non-finite value where finite required
    capacity = 6,   // request exceeds a hard limit (e.g. enumeration size)
    check_failed = 7,  // a verification check ran and failed
    internal = 8,
};

class error : public std::runtime_error {
  public:
    error(errc code, const std::string &what) : std::runtime_error(what), code_(code) {}
    errc code() const { return code_; }

  private:
    errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string &what) { throw error(code, what); }

} // namespace graphfree
