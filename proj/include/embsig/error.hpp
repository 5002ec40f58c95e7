#pragma once

#include <stdexcept>
#include <string>

namespace embsig {

// Error taxonomy mirrored by the CLI exit codes: usage errors exit 1,
// bad or inconsistent input data exits 2, numeric failures exit 3.
enum class ErrorKind { Usage = 1, Data = 2, Numeric = 3 };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

inline Error usage_error(const std::string& message) { return Error(ErrorKind::Usage, message); }
inline Error data_error(const std::string& message) { return Error(ErrorKind::Data, message); }
inline Error numeric_error(const std::string& message) { return Error(ErrorKind::Numeric, message); }

} // namespace embsig
