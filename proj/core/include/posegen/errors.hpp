#pragma once

#include <stdexcept>
#include <string>

namespace posegen {

/// Base class for all toolkit errors. `kind()` is the stable error name
/// printed by the CLI on the diagnostic stream.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(kind + ": " + what), kind_(std::move(kind)) {}

    const std::string& kind() const { return kind_; }

private:
    std::string kind_;
};

#define POSEGEN_DEFINE_ERROR(Name)                                  \
    class Name : public Error {                                     \
    public:                                                         \
        explicit Name(const std::string& what) : Error(#Name, what) {} \
    }

// numerical failures
POSEGEN_DEFINE_ERROR(NonFiniteValue);
POSEGEN_DEFINE_ERROR(DegenerateRotation6D);
POSEGEN_DEFINE_ERROR(DegenerateMean);
POSEGEN_DEFINE_ERROR(ExcessiveDegeneracy);

// contract violations
POSEGEN_DEFINE_ERROR(ShapeMismatch);
POSEGEN_DEFINE_ERROR(LengthMismatch);
POSEGEN_DEFINE_ERROR(EmptySamples);

// data errors
POSEGEN_DEFINE_ERROR(InvalidScene);
POSEGEN_DEFINE_ERROR(OffTrajectory);
POSEGEN_DEFINE_ERROR(UnknownColor);
POSEGEN_DEFINE_ERROR(ParseError);
POSEGEN_DEFINE_ERROR(IoError);
POSEGEN_DEFINE_ERROR(ArchitectureMismatch);

// usage errors (bad config keys/values)
POSEGEN_DEFINE_ERROR(ConfigError);

#undef POSEGEN_DEFINE_ERROR

}  // namespace posegen
