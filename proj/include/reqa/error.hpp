#pragma once

#include <stdexcept>
#include <string>

namespace reqa {

// Base class for all toolkit errors. `kind()` is a stable machine-readable
// tag used by the CLI when printing structured error messages.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& message)
        : std::runtime_error(message), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

#define REQA_DEFINE_ERROR(NAME)                                          \
    class NAME : public Error {                                          \
    public:                                                              \
        explicit NAME(const std::string& message) : Error(#NAME, message) {} \
    }

REQA_DEFINE_ERROR(DuplicateCandidate);
REQA_DEFINE_ERROR(UnknownCandidateId);
REQA_DEFINE_ERROR(ParseError);
REQA_DEFINE_ERROR(OutOfBounds);
REQA_DEFINE_ERROR(EmptyVocab);
REQA_DEFINE_ERROR(EmptyPool);
REQA_DEFINE_ERROR(UnknownDocument);
REQA_DEFINE_ERROR(EmptyInput);
REQA_DEFINE_ERROR(BatchTooSmall);
REQA_DEFINE_ERROR(InsufficientData);
REQA_DEFINE_ERROR(NormalizationDegenerate);
REQA_DEFINE_ERROR(GoldMissingFromRanking);
REQA_DEFINE_ERROR(MissingQuestion);
REQA_DEFINE_ERROR(MismatchedQuestionSets);
REQA_DEFINE_ERROR(EmptyDataset);
REQA_DEFINE_ERROR(IoError);
REQA_DEFINE_ERROR(FormatError);

#undef REQA_DEFINE_ERROR

}  // namespace reqa
