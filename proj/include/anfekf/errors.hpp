#pragma once

#include <stdexcept>
#include <string>

namespace anfekf {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Robot and landmark (nearly) coincide; range and bearing are undefined.
class DegenerateGeometryError : public Error {
public:
    using Error::Error;
};

/// A matrix that must be inverted is singular or too badly conditioned.
class SingularMatrixError : public Error {
public:
    using Error::Error;
};

/// Windowed statistic requested before the window is full.
class WarmupError : public Error {
public:
    using Error::Error;
};

class UnknownLandmarkError : public Error {
public:
    explicit UnknownLandmarkError(int id)
        : Error("unknown landmark id " + std::to_string(id)), id_(id) {}
    int id() const noexcept { return id_; }

private:
    int id_;
};

/// Invalid scenario, experiment or hyperparameter configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace anfekf
