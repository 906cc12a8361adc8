#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace alphasde {

// Base of everything the library throws.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid argument or precondition violation.
class ParameterError : public Error {
public:
    using Error::Error;
};

// A drift/noise field produced a non-finite value.
class EvaluationError : public Error {
public:
    EvaluationError(const std::string& what, std::vector<double> x)
        : Error(what), x_(std::move(x)) {}
    const std::vector<double>& point() const noexcept { return x_; }

private:
    std::vector<double> x_;
};

// Fixed-point iteration of an implicit step produced a non-finite iterate.
class DivergenceError : public Error {
public:
    DivergenceError(const std::string& what, int iteration)
        : Error(what), iteration_(iteration) {}
    int iteration() const noexcept { return iteration_; }

private:
    int iteration_;
};

// Operator assembly failed; carries the offending grid nodes.
class BuildError : public Error {
public:
    BuildError(const std::string& what, std::vector<std::size_t> nodes)
        : Error(what), nodes_(std::move(nodes)) {}
    const std::vector<std::size_t>& nodes() const noexcept { return nodes_; }

private:
    std::vector<std::size_t> nodes_;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, double residual)
        : Error(what), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

} // namespace alphasde
