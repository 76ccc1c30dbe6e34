#pragma once

#include <stdexcept>
#include <string>

namespace freeprob {

// Base class for all library errors so callers can catch in one place.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct DivisionByZeroConstantTerm : Error {
    DivisionByZeroConstantTerm() : Error("series division: divisor has zero constant term") {}
};

struct NonzeroConstantInnerTerm : Error {
    NonzeroConstantInnerTerm() : Error("series composition: inner series has nonzero constant term") {}
};

struct NotInvertible : Error {
    explicit NotInvertible(const std::string& what) : Error("series not invertible: " + what) {}
};

struct SizeLimitExceeded : Error {
    explicit SizeLimitExceeded(const std::string& what) : Error("size limit exceeded: " + what) {}
};

struct NotAPartition : Error {
    explicit NotAPartition(const std::string& what) : Error("not a partition: " + what) {}
};

struct SingularIntegrand : Error {
    explicit SingularIntegrand(const std::string& what) : Error("singular integrand: " + what) {}
};

struct OracleFailure : Error {
    explicit OracleFailure(const std::string& what) : Error("moment oracle failed: " + what) {}
};

struct OrderTooLow : Error {
    explicit OrderTooLow(const std::string& what) : Error("series order too low: " + what) {}
};

struct ZeroMean : Error {
    ZeroMean() : Error("S-transform undefined: first cumulant is zero") {}
};

struct OutsideSupport : Error {
    explicit OutsideSupport(const std::string& what) : Error("point outside continuous support: " + what) {}
};

struct AtomAtZero : Error {
    explicit AtomAtZero(const std::string& what) : Error("law has mass at or near zero: " + what) {}
};

struct BranchAmbiguity : Error {
    explicit BranchAmbiguity(const std::string& what) : Error("Cauchy transform branch ambiguous: " + what) {}
};

struct SupportTouchesOne : Error {
    explicit SupportTouchesOne(const std::string& what) : Error("support touches 1: " + what) {}
};

struct ThetaNotGreaterThanOne : Error {
    ThetaNotGreaterThanOne() : Error("theta must exceed 1") {}
};

struct InfeasibleConstants : Error {
    explicit InfeasibleConstants(const std::string& what) : Error("infeasible: " + what) {}
};

struct IllConditioned : Error {
    explicit IllConditioned(const std::string& what) : Error("matrix ill-conditioned: " + what) {}
};

struct NoConvergence : Error {
    explicit NoConvergence(const std::string& what) : Error("iteration did not converge: " + what) {}
};

} // namespace freeprob
