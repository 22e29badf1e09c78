#pragma once

#include <stdexcept>
#include <string>

namespace isg {

// Every failure the toolkit raises derives from Error so callers can record
// it by kind() in reports without a catch-site per type.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& message)
        : std::runtime_error(message), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

#define ISG_DEFINE_ERROR(Name, Base)                                        \
    class Name : public Base {                                              \
    public:                                                                 \
        explicit Name(const std::string& message) : Base(#Name, message) {} \
                                                                            \
    protected:                                                              \
        Name(std::string kind, const std::string& message)                  \
            : Base(std::move(kind), message) {}                             \
    };

// content model
ISG_DEFINE_ERROR(InvalidBlock, Error)
ISG_DEFINE_ERROR(InvalidToken, Error)
ISG_DEFINE_ERROR(TokenOutOfRange, Error)
ISG_DEFINE_ERROR(DocumentError, Error)

// gateway
ISG_DEFINE_ERROR(BackendError, Error)
ISG_DEFINE_ERROR(BackendUnreachable, BackendError)
ISG_DEFINE_ERROR(FixtureMiss, BackendError)
ISG_DEFINE_ERROR(NoJsonFound, Error)
ISG_DEFINE_ERROR(ConfigError, Error)

// evaluators
ISG_DEFINE_ERROR(MalformedPrediction, Error)
ISG_DEFINE_ERROR(ExtractionFailed, Error)
ISG_DEFINE_ERROR(GenerationFailed, Error)
ISG_DEFINE_ERROR(UnparseableJudgment, Error)
ISG_DEFINE_ERROR(MixedModes, Error)
ISG_DEFINE_ERROR(EmptyInput, Error)

// bench runner
ISG_DEFINE_ERROR(SchemaViolation, Error)
ISG_DEFINE_ERROR(DuplicateSampleId, Error)
ISG_DEFINE_ERROR(MissingAnswer, Error)
ISG_DEFINE_ERROR(IoError, Error)

// agent
ISG_DEFINE_ERROR(MalformedPlan, Error)

// Step-scoped execution failures.
class StepFailure : public Error {
public:
    StepFailure(std::string kind, int step, const std::string& message)
        : Error(std::move(kind), "step " + std::to_string(step) + ": " + message),
          step_(step), detail_(message) {}
    int step() const noexcept { return step_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    int step_;
    std::string detail_;
};

class ToolFailure : public StepFailure {
public:
    ToolFailure(int step, const std::string& message) : StepFailure("ToolFailure", step, message) {}
};

class CaptionFailure : public StepFailure {
public:
    CaptionFailure(int step, const std::string& message)
        : StepFailure("CaptionFailure", step, message) {}
};
ISG_DEFINE_ERROR(RefinementExhausted, Error)

#undef ISG_DEFINE_ERROR

}  // namespace isg
