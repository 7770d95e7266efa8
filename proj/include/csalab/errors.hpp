#pragma once

#include <stdexcept>
#include <string>

namespace csalab
{
    /// Argument outside an operation's mathematical domain.
    class DomainError : public std::domain_error
    {
    public:
        using std::domain_error::domain_error;
    };

    /// Numerical routine failed to meet its tolerance.
    class ConvergenceError : public std::runtime_error
    {
    public:
        ConvergenceError(const std::string &what, double achieved_error)
            : std::runtime_error(what), achieved_error_(achieved_error) {}

        double achieved_error() const { return achieved_error_; }

    private:
        double achieved_error_;
    };

    /// Requested work would exceed a configured resource budget.
    class ResourceError : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };
}
