#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace anb {

// Base class for everything thrown by this library. CLI maps these to exit
// code 2; anything else is a usage error.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class ShapeError : public Error {
public:
    using Error::Error;
};

class InvalidArgumentError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

// Structural problems in a serialized model/dataset/result file.
class FormatError : public Error {
public:
    using Error::Error;
};

class MagicMismatchError : public FormatError {
public:
    using FormatError::FormatError;
};

class TruncatedBlobError : public FormatError {
public:
    TruncatedBlobError(const std::string& what_part, std::uint64_t expected,
                       std::uint64_t actual)
        : FormatError(what_part + ": expected " + std::to_string(expected) +
                      " bytes, got " + std::to_string(actual)),
          expected_bytes(expected),
          actual_bytes(actual) {}

    std::uint64_t expected_bytes;
    std::uint64_t actual_bytes;
};

class VersionError : public FormatError {
public:
    using FormatError::FormatError;
};

class SchemaError : public FormatError {
public:
    using FormatError::FormatError;
};

// snr_of(0): zero power means "no noise", there is no finite SNR.
class NoNoiseError : public Error {
public:
    NoNoiseError() : Error("power 0 means no noise, SNR is undefined") {}
    using Error::Error;
};

// Normalizing by a zero baseline accuracy has no meaning.
class UndefinedBaselineError : public Error {
public:
    using Error::Error;
};

// A layer average over fewer entries than the model has layers.
class IncompleteSweepError : public Error {
public:
    using Error::Error;
};

// A results directory that is missing rows or was marked incomplete.
class IncompleteResultError : public Error {
public:
    using Error::Error;
};

// Snapshot applied to a model it was not taken from.
class MismatchError : public Error {
public:
    using Error::Error;
};

}  // namespace anb
