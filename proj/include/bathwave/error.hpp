#pragma once

#include <stdexcept>
#include <string>

namespace bathwave {

enum class ErrorKind {
    Validation,
    DegenerateBand,
    VanHove,
    QuadratureNotConverged,
    CausticDirection,
    NoResonantDirection,
    Unstable,
    FitUnreliable,
    ClosedOrbit,
    EnergyDrift,
    NormDrift,
    EmptySlice,
};

const char* to_string(ErrorKind k);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const { return kind_; }
    // validation problems are the caller's fault; everything else is numerical
    bool is_validation() const { return kind_ == ErrorKind::Validation; }

private:
    ErrorKind kind_;
};

}  // namespace bathwave
