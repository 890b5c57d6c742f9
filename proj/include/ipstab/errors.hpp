#pragma once

#include <stdexcept>
#include <string>

namespace ipstab {

// Machine-checkable failure classes. Everything user-facing maps onto one of
// these; the CLI translates them into exit codes (invalid input vs numeric
// failure).
enum class Errc {
    // construction / validation
    NotStrictlyCausal,
    ZeroLeadingCoefficient,
    EmptyCoefficients,
    InvalidArgument,
    // history evaluation
    OutOfDomain,
    DerivativeUnavailable,
    // linear algebra / polynomial kernel
    DegreeZero,
    NonSquare,
    NoConvergence,
    // quasi-polynomial root machinery
    RootOnBoundary,
    BudgetExceeded,
    // closed-loop structure
    NotNeutral,
    NotAdvanced,
    OrderGap,
    // simulation
    AlgebraicLoopSingular,
    SingularUpdate,
    TooShort,
};

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}

    [[nodiscard]] Errc code() const noexcept { return code_; }

    // True for failures of the numeric machinery (as opposed to bad input).
    [[nodiscard]] bool is_numeric() const noexcept {
        switch (code_) {
        case Errc::NoConvergence:
        case Errc::RootOnBoundary:
        case Errc::BudgetExceeded:
        case Errc::AlgebraicLoopSingular:
        case Errc::SingularUpdate:
            return true;
        default:
            return false;
        }
    }

private:
    Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

inline const char* errc_name(Errc c) {
    switch (c) {
    case Errc::NotStrictlyCausal: return "NotStrictlyCausal";
    case Errc::ZeroLeadingCoefficient: return "ZeroLeadingCoefficient";
    case Errc::EmptyCoefficients: return "EmptyCoefficients";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::OutOfDomain: return "OutOfDomain";
    case Errc::DerivativeUnavailable: return "DerivativeUnavailable";
    case Errc::DegreeZero: return "DegreeZero";
    case Errc::NonSquare: return "NonSquare";
    case Errc::NoConvergence: return "NoConvergence";
    case Errc::RootOnBoundary: return "RootOnBoundary";
    case Errc::BudgetExceeded: return "BudgetExceeded";
    case Errc::NotNeutral: return "NotNeutral";
    case Errc::NotAdvanced: return "NotAdvanced";
    case Errc::OrderGap: return "OrderGap";
    case Errc::AlgebraicLoopSingular: return "AlgebraicLoopSingular";
    case Errc::SingularUpdate: return "SingularUpdate";
    case Errc::TooShort: return "TooShort";
    }
    return "Unknown";
}

} // namespace ipstab
