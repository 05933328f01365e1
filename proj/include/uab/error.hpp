#pragma once

#include <stdexcept>
#include <string>

namespace uab {

/// Base class of every error the toolkit throws. Subclasses name the failure
/// kind so callers can catch selectively.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define UAB_DEFINE_ERROR(Name)                 \
    class Name : public Error {                \
    public:                                    \
        using Error::Error;                    \
    }

UAB_DEFINE_ERROR(IoError);
UAB_DEFINE_ERROR(FormatError);
UAB_DEFINE_ERROR(InvalidDimension);
UAB_DEFINE_ERROR(CropTooLarge);
UAB_DEFINE_ERROR(DimensionMismatch);
UAB_DEFINE_ERROR(TooSmall);
UAB_DEFINE_ERROR(ProcessError);
UAB_DEFINE_ERROR(ConfigError);
UAB_DEFINE_ERROR(InsufficientData);
UAB_DEFINE_ERROR(MissingStimulus);
UAB_DEFINE_ERROR(DegenerateData);
UAB_DEFINE_ERROR(ShapeError);
UAB_DEFINE_ERROR(TooFewSamples);
UAB_DEFINE_ERROR(ZeroVariance);
UAB_DEFINE_ERROR(LengthMismatch);
UAB_DEFINE_ERROR(UnknownStimulus);
UAB_DEFINE_ERROR(JoinError);

#undef UAB_DEFINE_ERROR

/// Row-level failure carrying the 1-based line number of the offending row
/// (0 when the failure is not tied to a row).
class RowError : public Error {
public:
    RowError(const std::string& what, std::size_t line)
        : Error(line > 0 ? what + " (line " + std::to_string(line) + ")" : what), detail_(what), line_(line) {}

    [[nodiscard]] std::size_t line() const noexcept { return line_; }
    /// The message without the line suffix.
    [[nodiscard]] const std::string& detail() const noexcept { return detail_; }

private:
    std::string detail_;
    std::size_t line_;
};

class ParseError : public RowError {
public:
    using RowError::RowError;
};

/// A value outside its allowed range, e.g. a rating not in 1..5.
class RangeError : public RowError {
public:
    using RowError::RowError;
};

}  // namespace uab
