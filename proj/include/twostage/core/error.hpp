//*****************************************************************************
// Copyright 2026 The twostage Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//*****************************************************************************
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace twostage {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Caller passed a value outside an operation's domain.
class InvalidInputError : public Error {
  public:
    using Error::Error;
};

/// A crop box that does not overlap the image at all.
class EmptyIntersectionError : public InvalidInputError {
  public:
    using InvalidInputError::InvalidInputError;
};

class DimensionMismatchError : public InvalidInputError {
  public:
    DimensionMismatchError(std::size_t expected, std::size_t actual, const std::string &what)
        : InvalidInputError(what + ": expected dimension " + std::to_string(expected) + ", got " +
                            std::to_string(actual)),
          expected_(expected), actual_(actual) {}

    [[nodiscard]] std::size_t expected() const noexcept { return expected_; }
    [[nodiscard]] std::size_t actual() const noexcept { return actual_; }

  private:
    std::size_t expected_;
    std::size_t actual_;
};

class InvalidLabelsError : public InvalidInputError {
  public:
    using InvalidInputError::InvalidInputError;
};

class InsufficientDataError : public InvalidInputError {
  public:
    using InvalidInputError::InvalidInputError;
};

class DegenerateDataError : public InvalidInputError {
  public:
    using InvalidInputError::InvalidInputError;
};

/// Bad configuration: threshold rules, backend wiring, io_spec contents.
class ConfigError : public Error {
  public:
    using Error::Error;
};

/// A model artifact whose output tensor does not have the declared shape.
class ShapeMismatchError : public ConfigError {
  public:
    using ConfigError::ConfigError;
};

class IoError : public Error {
  public:
    using Error::Error;
};

/// Text input that does not follow its line grammar. `line()` is 1-based, 0 when not tied to a line.
class ParseError : public Error {
  public:
    ParseError(const std::string &source, std::size_t line, const std::string &message)
        : Error(source + (line > 0 ? ":" + std::to_string(line) : std::string{}) + ": " + message),
          line_(line) {}

    [[nodiscard]] std::size_t line() const noexcept { return line_; }

  private:
    std::size_t line_;
};

/// Failure inside a model backend at inference time.
class BackendError : public Error {
  public:
    using Error::Error;
};

class FixtureMissError : public BackendError {
  public:
    explicit FixtureMissError(std::string fingerprint)
        : BackendError("fixture miss: no entry for image fingerprint " + fingerprint),
          fingerprint_(std::move(fingerprint)) {}

    [[nodiscard]] const std::string &fingerprint() const noexcept { return fingerprint_; }

  private:
    std::string fingerprint_;
};

/// Runs fn(); a library error escaping it gets `what` prefixed to its message
/// and keeps its broad category (config, io, backend, invalid input).
template <typename Fn>
decltype(auto) in_context(const std::string &what, Fn &&fn) {
    try {
        return fn();
    } catch (const ShapeMismatchError &e) {
        throw ShapeMismatchError(what + ": " + e.what());
    } catch (const ConfigError &e) {
        throw ConfigError(what + ": " + e.what());
    } catch (const IoError &e) {
        throw IoError(what + ": " + e.what());
    } catch (const ParseError &e) {
        throw ParseError(what, 0, e.what());
    } catch (const BackendError &e) {
        throw BackendError(what + ": " + e.what());
    } catch (const InvalidLabelsError &e) {
        throw InvalidLabelsError(what + ": " + e.what());
    } catch (const InvalidInputError &e) {
        throw InvalidInputError(what + ": " + e.what());
    }
}

class NonConvergenceError : public Error {
  public:
    NonConvergenceError(std::size_t iterations, double residual)
        : Error("solver did not converge after " + std::to_string(iterations) +
                " iterations; max KKT violation " + std::to_string(residual)),
          iterations_(iterations), residual_(residual) {}

    [[nodiscard]] std::size_t iterations() const noexcept { return iterations_; }
    [[nodiscard]] double residual() const noexcept { return residual_; }

  private:
    std::size_t iterations_;
    double residual_;
};

} // namespace twostage
