#pragma once

#include <stdexcept>
#include <string>

namespace polyvem {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InputError : public Error {
public:
    using Error::Error;
};

class GeometryError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, int line)
        : Error("line " + std::to_string(line) + ": " + what), line_(line)
    {
    }
    [[nodiscard]] int line() const noexcept { return line_; }

private:
    int line_;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class UnsupportedError : public Error {
public:
    using Error::Error;
};

/// Failure tied to one mesh cell (singular local system, non-finite value).
class ElementError : public Error {
public:
    ElementError(const std::string& what, int cell)
        : Error("cell " + std::to_string(cell) + ": " + what), cell_(cell)
    {
    }
    [[nodiscard]] int cell() const noexcept { return cell_; }

private:
    int cell_;
};

class SolverError : public Error {
public:
    using Error::Error;
};

class NonConvergenceError : public Error {
public:
    NonConvergenceError(const std::string& what, double last_increment, double last_residual)
        : Error(what), last_increment_(last_increment), last_residual_(last_residual)
    {
    }
    [[nodiscard]] double last_increment() const noexcept { return last_increment_; }
    [[nodiscard]] double last_residual() const noexcept { return last_residual_; }

private:
    double last_increment_;
    double last_residual_;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// A pipeline failure labelled with the stage it happened in.
class StageError : public Error {
public:
    StageError(const std::string& stage, const std::string& what)
        : Error(stage + ": " + what), stage_(stage)
    {
    }
    [[nodiscard]] const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

}  // namespace polyvem
