#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pq {

// Base of every error the library throws. `numeric()` separates failures of
// the computation (singular forms, domain errors, leaving the chart) from
// violated preconditions; the CLI maps them to distinct exit codes.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what, bool numeric = false)
        : std::runtime_error(what), numeric_(numeric) {}
    bool numeric() const noexcept { return numeric_; }

private:
    bool numeric_;
};

class SyntaxError : public Error {
public:
    SyntaxError(const std::string& message, std::size_t position)
        : Error("syntax error at position " + std::to_string(position) + ": " + message),
          position_(position) {}
    std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

class UnknownIdentifier : public Error {
public:
    UnknownIdentifier(const std::string& name, std::size_t position)
        : Error("unknown identifier '" + name + "' at position " + std::to_string(position)),
          name_(name), position_(position) {}
    const std::string& name() const noexcept { return name_; }
    std::size_t position() const noexcept { return position_; }

private:
    std::string name_;
    std::size_t position_;
};

// log of a nonpositive number, division by zero, and friends.
class DomainError : public Error {
public:
    explicit DomainError(const std::string& what) : Error(what, true) {}
};

class SingularFormError : public Error {
public:
    explicit SingularFormError(const std::string& what) : Error(what, true) {}
};

class DomainExitError : public Error {
public:
    DomainExitError(const std::string& what, std::size_t exit_index)
        : Error(what, true), exit_index_(exit_index) {}
    std::size_t exit_index() const noexcept { return exit_index_; }

private:
    std::size_t exit_index_;
};

// Precondition failures: mismatched charts, bad dimensions, invalid configs.
class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& what) : Error(what, false) {}
};

// A certification (symplectic, polarization, bundle, partition of unity)
// found a residual above its threshold.
class CertificationError : public Error {
public:
    CertificationError(const std::string& what, double residual)
        : Error(what, true), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

// A pairing integrand that should descend to the leaf space varies along a
// leaf.
class NotLeafConstantError : public Error {
public:
    NotLeafConstantError(const std::string& what, double variation) : Error(what, false), variation_(variation) {}
    double variation() const noexcept { return variation_; }

private:
    double variation_;
};

} // namespace pq
