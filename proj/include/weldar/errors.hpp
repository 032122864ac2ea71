#pragma once

#include <stdexcept>
#include <string>

namespace weldar {

// Root of every error the engine raises. The concrete type is the contract;
// code() is what travels over the wire.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& what)
        : std::runtime_error(what), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

#define WELDAR_DEFINE_ERROR(Name)                                              \
    class Name : public Error {                                                \
    public:                                                                    \
        explicit Name(const std::string& what) : Error(#Name, what) {}         \
    }

// pose-model
WELDAR_DEFINE_ERROR(UncalibratedError);
WELDAR_DEFINE_ERROR(DegeneratePoseError);
WELDAR_DEFINE_ERROR(ImplausibleTapError);
WELDAR_DEFINE_ERROR(InvalidCalibrationError);
WELDAR_DEFINE_ERROR(PreconditionError);

// skill-extractor
WELDAR_DEFINE_ERROR(DegenerateOrientationError);
WELDAR_DEFINE_ERROR(NumericalError);

// feedback-lesson
WELDAR_DEFINE_ERROR(PlanExhaustedError);
WELDAR_DEFINE_ERROR(EmptyLineError);

// weld-trigger
WELDAR_DEFINE_ERROR(InsufficientHistoryError);

// integrity / analytics
WELDAR_DEFINE_ERROR(DegenerateInputError);
WELDAR_DEFINE_ERROR(AllFramesExcludedError);
WELDAR_DEFINE_ERROR(DegeneratePoolError);
WELDAR_DEFINE_ERROR(InsufficientLinesError);

// synth-bench
WELDAR_DEFINE_ERROR(InfeasibleSpecError);
WELDAR_DEFINE_ERROR(OutOfRangeEventError);

// session-io
WELDAR_DEFINE_ERROR(StorageError);
WELDAR_DEFINE_ERROR(SchemaError);
WELDAR_DEFINE_ERROR(SequenceError);
WELDAR_DEFINE_ERROR(ProtocolError);

#undef WELDAR_DEFINE_ERROR

}  // namespace weldar
