#pragma once

#include <stdexcept>
#include <string>

namespace apkr {

// All library failures derive from Error so callers can distinguish
// numerical trouble from programming mistakes with one catch.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Shape mismatch or a length that is structurally invalid (e.g. FWHT on a
// non power-of-two vector).
class DimensionError : public Error {
public:
    explicit DimensionError(const std::string& what) : Error(what) {}
};

// Invalid scalar parameter (eps/delta out of range, j = 0, ...).
class ParameterError : public Error {
public:
    explicit ParameterError(const std::string& what) : Error(what) {}
};

// Numerically rank-deficient input where full rank is required.
class RankError : public Error {
public:
    explicit RankError(const std::string& what) : Error(what) {}
};

// Matrix expected to be symmetric positive definite is not.
class DefinitenessError : public Error {
public:
    explicit DefinitenessError(const std::string& what) : Error(what) {}
};

// Data radius exceeds the kernel factor's validity region.
class RadiusError : public Error {
public:
    explicit RadiusError(const std::string& what) : Error(what) {}
};

// Entry magnitude escaped the representable range during a dense power.
class OverflowError : public Error {
public:
    explicit OverflowError(const std::string& what) : Error(what) {}
};

// Problem too large for an exact dense reference computation.
class SizeError : public Error {
public:
    explicit SizeError(const std::string& what) : Error(what) {}
};

// I/O or file format problem.
class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(what) {}
};

}  // namespace apkr
