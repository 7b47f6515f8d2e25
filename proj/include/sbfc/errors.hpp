#pragma once

#include <stdexcept>
#include <string>

namespace sbfc {

// Base for every error the library raises.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Inertia matrix lost positive definiteness during a solve; signals bad plant parameters.
class SingularInertia : public Error {
public:
    using Error::Error;
};

// Two fault events on one joint share an onset time.
class ScheduleConflict : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

// A state component left the finite range (|x| > 1e6 or NaN) during integration.
class NumericalDivergence : public Error {
public:
    NumericalDivergence(const std::string& what, double time) : Error(what), time_(time) {}
    [[nodiscard]] double time() const { return time_; }

private:
    double time_;
};

// A file or directory could not be read or written.
class IoError : public Error {
public:
    using Error::Error;
};

class EmptyWindow : public Error {
public:
    using Error::Error;
};

// Malformed configuration text; carries the offending key and, when known, the 1-based line.
class ParseError : public Error {
public:
    ParseError(const std::string& key, int line, const std::string& message)
        : Error(format(key, line, message)), key_(key), line_(line) {}
    [[nodiscard]] const std::string& key() const { return key_; }
    [[nodiscard]] int line() const { return line_; }

private:
    static std::string format(const std::string& key, int line, const std::string& message)
    {
        std::string out = "parse error";
        if (line > 0)
            out += " at line " + std::to_string(line);
        if (!key.empty())
            out += " (key '" + key + "')";
        return out + ": " + message;
    }

    std::string key_;
    int line_;
};

// A value parsed fine but violates a domain invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

} // namespace sbfc
