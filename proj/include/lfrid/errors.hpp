#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lfrid {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Matrix or vector dimensions are inconsistent with the operation's contract.
class DimMismatch : public Error {
public:
    explicit DimMismatch(const std::string& what) : Error("dimension mismatch: " + what) {}
};

/// A signal specification is degenerate (empty band, non-positive duration, ...).
class InvalidSpec : public Error {
public:
    explicit InvalidSpec(const std::string& what) : Error("invalid spec: " + what) {}
};

/// No DFT bin falls inside the requested excitation band.
class EmptyBand : public Error {
public:
    explicit EmptyBand(const std::string& what) : Error("empty band: " + what) {}
};

/// Record too short for the subspace horizon.
class InsufficientData : public Error {
public:
    explicit InsufficientData(const std::string& what) : Error("insufficient data: " + what) {}
};

/// A state trajectory has (numerically) zero variance; it cannot be normalized.
class DegenerateState : public Error {
public:
    explicit DegenerateState(const std::string& what) : Error("degenerate state: " + what) {}
};

/// A z-candidate channel has (numerically) zero variance; redraw with a new seed.
class DegenerateChannel : public Error {
public:
    explicit DegenerateChannel(const std::string& what) : Error("degenerate channel: " + what) {}
};

/// The linear model handed to the initializer is not stable.
class UnstableBla : public Error {
public:
    explicit UnstableBla(const std::string& what) : Error("unstable BLA: " + what) {}
};

/// Parameter vector length does not match its layout.
class LayoutError : public Error {
public:
    explicit LayoutError(const std::string& what) : Error("layout error: " + what) {}
};

/// The optimizer could not evaluate the residual at the starting point.
class InvalidStart : public Error {
public:
    explicit InvalidStart(const std::string& what) : Error("invalid start: " + what) {}
};

/// Nothing left to score after discarding transient samples.
class EmptyEvaluation : public Error {
public:
    explicit EmptyEvaluation(const std::string& what) : Error("empty evaluation: " + what) {}
};

/// Experiment configuration is invalid (missing file, bad field, channel mismatch).
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error("config error: " + what) {}
};

/// File could not be read or written.
class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error("io error: " + what) {}
};

} // namespace lfrid
