#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace xspace {

/// Base class for every error raised by the engine.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input text (CoNLL-U, lexicon, quiz, ...). Carries the 1-based line.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Structurally well-formed input that violates a model invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// A file could not be opened or read.
class IoError : public Error {
public:
    explicit IoError(const std::string& path, const std::string& why = "cannot open file")
        : Error(why + ": " + path), path_(path) {}

    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

/// Caller violated an operation's precondition (empty question, unknown uri, ...).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Contract violation by an external collaborator (remote embedding provider).
class ProviderError : public Error {
public:
    using Error::Error;
};

/// Failure of one pipeline stage; wraps the underlying cause.
class StageError : public Error {
public:
    StageError(std::string stage, const std::string& cause)
        : Error(stage + ": " + cause), stage_(std::move(stage)) {}

    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

}  // namespace xspace
