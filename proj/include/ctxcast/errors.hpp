#pragma once

/// @file errors.hpp
/// Exception taxonomy shared across the library. Every error a module
/// contract names maps to one concrete type here so callers and tests can
/// catch them precisely.

#include <stdexcept>
#include <string>

namespace ctxcast {

/// Root of all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ====== task files ======

struct MalformedLine final : Error {
    int line;
    MalformedLine(int line_, const std::string& reason)
        : Error("malformed line " + std::to_string(line_) + ": " + reason), line(line_) {}
};

struct InvariantViolation final : Error {
    std::string task_id;
    std::string which;
    InvariantViolation(std::string task_id_, std::string which_)
        : Error("task '" + task_id_ + "' violates invariant: " + which_),
          task_id(std::move(task_id_)),
          which(std::move(which_)) {}
};

struct DuplicateId final : Error {
    explicit DuplicateId(const std::string& id) : Error("duplicate task id '" + id + "'") {}
};

// ====== metrics ======

struct EmptySamples final : Error {
    EmptySamples() : Error("empty sample set") {}
    using Error::Error;
};

struct NonFiniteInput final : Error {
    using Error::Error;
};

struct TimestampMismatch final : Error {
    using Error::Error;
};

struct EmptyInput final : Error {
    EmptyInput() : Error("empty input") {}
};

struct EmptyGroup final : Error {
    using Error::Error;
};

// ====== prompt rendering ======

struct MissingSlot final : Error {
    MissingSlot(const std::string& kind, const std::string& slot)
        : Error("prompt kind " + kind + " requires slot '" + slot + "'") {}
};

struct ExtraSlot final : Error {
    ExtraSlot(const std::string& kind, const std::string& slot)
        : Error("prompt kind " + kind + " does not accept slot '" + slot + "'") {}
};

// ====== output parsing ======

struct MissingOpenTag final : Error {
    explicit MissingOpenTag(const std::string& tag) : Error("missing <" + tag + "> tag") {}
};

struct MissingCloseTag final : Error {
    explicit MissingCloseTag(const std::string& tag) : Error("missing </" + tag + "> tag") {}
};

struct DuplicateTimestamp final : Error {
    explicit DuplicateTimestamp(const std::string& ts)
        : Error("timestamp listed twice: " + ts) {}
};

struct UnparsableLine final : Error {
    int line;
    UnparsableLine(int line_, const std::string& content)
        : Error("unparsable line " + std::to_string(line_) + ": " + content), line(line_) {}
};

struct NonFiniteValue final : Error {
    using Error::Error;
};

struct MissingAnswerTag final : Error {
    MissingAnswerTag() : Error("missing <answer> tag") {}
};

struct UnrecognizedVerdict final : Error {
    explicit UnrecognizedVerdict(const std::string& body)
        : Error("verdict is neither YES nor NO: '" + body + "'") {}
};

// ====== llm client ======

struct TransportError final : Error {
    using Error::Error;
};

struct AuthMissing final : Error {
    using Error::Error;
};

struct TimeoutError final : Error {
    using Error::Error;
};

struct RetriesExhausted final : Error {
    int sample_index;
    std::string last_error;
    RetriesExhausted(int sample_index_, const std::string& last_error_)
        : Error("retries exhausted on sample " + std::to_string(sample_index_) +
                " (last error: " + last_error_ + ")"),
          sample_index(sample_index_),
          last_error(last_error_) {}
};

struct NoSignal final : Error {
    using Error::Error;
};

// ====== mock endpoint ======

struct NoRuleMatched final : Error {
    using Error::Error;
};

struct AmbiguousHistory final : Error {
    using Error::Error;
};

struct MockExhausted final : Error {
    using Error::Error;
};

// ====== base forecasters ======

struct HistoryTooShort final : Error {
    using Error::Error;
};

// ====== strategies ======

struct ExampleMissingFuture final : Error {
    ExampleMissingFuture() : Error("in-context example has no ground-truth future") {}
};

// ====== routing ======

struct InvalidPermutation final : Error {
    using Error::Error;
};

struct DegenerateGap final : Error {
    DegenerateGap() : Error("random and ideal curve areas coincide") {}
};

// ====== cli ======

struct TaskSetMismatch final : Error {
    using Error::Error;
};

}  // namespace ctxcast
