#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace noiselab {

enum class ErrorKind {
    argument,
    format,
    range,
    usage,
    data,
    training,
    run,
    io,
};

std::string_view to_string(ErrorKind kind);

/// Base of every error raised by the library. The kind is what the CLI
/// reports in its machine-readable failure line.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

#define NOISELAB_DEFINE_ERROR(Name, Kind)                                  \
    class Name : public Error {                                            \
    public:                                                                \
        explicit Name(const std::string& message) : Error(Kind, message) {} \
    }

NOISELAB_DEFINE_ERROR(ArgumentError, ErrorKind::argument);
NOISELAB_DEFINE_ERROR(FormatError, ErrorKind::format);
NOISELAB_DEFINE_ERROR(RangeError, ErrorKind::range);
NOISELAB_DEFINE_ERROR(UsageError, ErrorKind::usage);
NOISELAB_DEFINE_ERROR(DataError, ErrorKind::data);
NOISELAB_DEFINE_ERROR(IoError, ErrorKind::io);

#undef NOISELAB_DEFINE_ERROR

/// Non-finite value hit during an optimizer step.
class TrainingError : public Error {
public:
    TrainingError(const std::string& message, std::size_t batch_index)
        : Error(ErrorKind::training, message), batch_index_(batch_index) {}

    std::size_t batch_index() const noexcept { return batch_index_; }

private:
    std::size_t batch_index_;
};

/// Failure of a whole training run; the message carries the phase label.
class RunError : public Error {
public:
    RunError(std::string phase, const std::string& message)
        : Error(ErrorKind::run, "[" + phase + "] " + message), phase_(std::move(phase)) {}

    const std::string& phase() const noexcept { return phase_; }

private:
    std::string phase_;
};

}  // namespace noiselab
