#pragma once

#include <stdexcept>
#include <string>

namespace skrm {

/// Base class for every error raised by the simulator.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A shift would push cells past the overflow region at a track end.
class BoundaryViolation : public Error {
public:
    using Error::Error;
};

/// Inject issued on a cell that already holds a skyrmion.
class DoubleInjection : public Error {
public:
    using Error::Error;
};

class PortOutOfRange : public Error {
public:
    using Error::Error;
};

/// Words of one batch do not share a track (group) and port alignment.
class AlignmentError : public Error {
public:
    using Error::Error;
};

/// Permutation write invoked on more than one word.
class UnsupportedParallelPw : public Error {
public:
    using Error::Error;
};

/// Track pool, node group or value arena cannot take another entry.
class CapacityError : public Error {
public:
    using Error::Error;
};

class ArenaFull : public CapacityError {
public:
    using CapacityError::CapacityError;
};

class LookupError : public Error {
public:
    using Error::Error;
};

class StructuralCorruption : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

} // namespace skrm
