#pragma once
#include <stdexcept>
#include <string>

namespace liveeval {

// Input / contract violations the caller can fix (bad file, unknown id, budget
// too large, ...). The CLI maps these to exit code 2; anything else that escapes
// to main is an internal error and exits 1.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

[[noreturn]] inline void fail(const std::string& msg) { throw Error(msg); }

}  // namespace liveeval
