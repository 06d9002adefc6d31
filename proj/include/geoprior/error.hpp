#pragma once

#include <stdexcept>
#include <string>

namespace geoprior {

enum class ErrorKind {
    DuplicateId,
    CoordinateOutOfRange,
    UnknownLabel,
    BrokenHierarchy,
    InvalidConfig,
    VocabularyMismatch,
    UnsupportedVersion,
    CorruptFile,
    LengthMismatch,
    MissingObservation,
    HeaderMismatch,
    KOutOfRange,
    AllEmpty,
    AllZeroWeights,
    ShapeMismatch,
    InfeasibleSpec,
    IoError,
};

const char* error_kind_name(ErrorKind kind);

/// Exception carrying a machine-checkable kind next to the human message.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(error_kind_name(kind)) + ": " + message),
          kind_(kind) {}

    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace geoprior
