#pragma once

#include <stdexcept>
#include <string>

namespace surfaceai {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A caller broke a documented precondition.
class ContractViolation : public Error {
public:
    using Error::Error;
};

// Input document could not be understood. `where` names the location
// (byte offset, row number or JSON path) when known.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::string where = {})
        : Error(where.empty() ? what : where + ": " + what), where_(std::move(where)) {}

    const std::string& where() const noexcept { return where_; }

private:
    std::string where_;
};

class BackendError : public Error {
public:
    using Error::Error;
};

} // namespace surfaceai
