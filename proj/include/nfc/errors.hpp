// errors.hpp - exception types. Each kind maps to a distinct CLI exit code.

#pragma once

#include <stdexcept>
#include <string>

namespace nfc {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual const char* kind() const noexcept { return "error"; }
    virtual int exit_code() const noexcept { return 1; }
};

class InvalidArgument : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "invalid_argument"; }
    int exit_code() const noexcept override { return 2; }
};

class ConfigError : public Error {
public:
    ConfigError(std::string field, const std::string& msg)
        : Error(field.empty() ? msg : field + ": " + msg), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }
    const char* kind() const noexcept override { return "config_error"; }
    int exit_code() const noexcept override { return 3; }

private:
    std::string field_;
};

/// The solver declines to run on a grid that cannot resolve the detunings.
class SolverRefusal : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "solver_refusal"; }
    int exit_code() const noexcept override { return 4; }
};

class NoEchoDetected : public Error {
public:
    NoEchoDetected() : Error("no echo detected") {}
    explicit NoEchoDetected(const std::string& why) : Error("no echo detected: " + why) {}
    const char* kind() const noexcept override { return "no_echo_detected"; }
    int exit_code() const noexcept override { return 5; }
};

class ConvergenceFailure : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "convergence_failure"; }
    int exit_code() const noexcept override { return 6; }
};

class IoError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "io_error"; }
    int exit_code() const noexcept override { return 7; }
};

} // namespace nfc
