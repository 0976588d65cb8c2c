#pragma once

#include <stdexcept>
#include <string>

#include "cvec.hpp"

namespace holoflow {

struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// A point handed to a domain-restricted operation lies outside the domain.
struct DomainViolationError : Error {
    cvec point;
    DomainViolationError(const std::string& what, cvec p) : Error(what), point(std::move(p)) {}
};

// z and w coincide to tolerance; directional distance data is undefined there.
struct DegeneratePairError : Error {
    using Error::Error;
};

// Every step of a difference ladder left the domain.
struct StepSizeError : Error {
    using Error::Error;
};

struct InvalidCompactError : Error {
    using Error::Error;
};

struct InvalidWeightError : Error {
    using Error::Error;
};

struct InvalidFieldError : Error {
    using Error::Error;
};

struct SamplingError : Error {
    using Error::Error;
};

struct PreconditionError : Error {
    using Error::Error;
};

// Difference-quotient recovery was requested at (or too close to) a field
// switching time.
struct RegularityPointError : Error {
    double time = 0.0;
    RegularityPointError(const std::string& what, double t) : Error(what), time(t) {}
};

// Discrete iteration left the domain mid-composition.
struct IterationEscapeError : Error {
    int step = -1;
    IterationEscapeError(const std::string& what, int k) : Error(what), step(k) {}
};

// A nonautonomous solve escaped inside a specific field piece.
struct NonGeneratorPieceError : Error {
    int piece = -1;
    double escape_time = 0.0;
    NonGeneratorPieceError(const std::string& what, int idx, double t)
        : Error(what), piece(idx), escape_time(t) {}
};

// Something certified beforehand failed downstream anyway.
struct InternalInconsistencyError : Error {
    using Error::Error;
};

// Scenario input failed structural validation.
struct SchemaError : Error {
    using Error::Error;
};

}  // namespace holoflow
