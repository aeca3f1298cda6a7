#pragma once

#include <stdexcept>
#include <string>

namespace lonetrack {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// An operation was called on input that does not meet its stated precondition.
class PreconditionError : public Error {
public:
    using Error::Error;
};

// Malformed graph or map data, including anything rejected by the text parser.
class InputError : public Error {
public:
    InputError(std::string check, const std::string& message, int line = 0, int column = 0)
        : Error(format(check, message, line, column)),
          check_(std::move(check)),
          line_(line),
          column_(column) {}

    const std::string& check() const noexcept { return check_; }
    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }

private:
    static std::string format(const std::string& check, const std::string& message, int line, int column) {
        std::string out;
        if (line > 0) {
            out += "line " + std::to_string(line);
            if (column > 0) out += ", column " + std::to_string(column);
            out += ": ";
        }
        out += check + ": " + message;
        return out;
    }

    std::string check_;
    int line_;
    int column_;
};

// Raised by multi-stage pipelines; carries the name of the stage that failed.
class StageError : public Error {
public:
    StageError(std::string stage, const std::string& message)
        : Error(stage + ": " + message), stage_(std::move(stage)) {}

    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

// A search ran out of budget before it could certify its answer.
class UnknownAtBound : public Error {
public:
    using Error::Error;
};

}  // namespace lonetrack
