#pragma once

#include <stdexcept>
#include <string>

namespace mapp {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Archive bytes are not a readable PWAR file (magic, version, truncation).
class FormatError : public Error {
public:
    using Error::Error;
};

/// A required tensor is missing or has the wrong shape.
class SchemaError : public Error {
public:
    SchemaError(std::string tensor, const std::string& what)
        : Error(tensor + ": " + what), tensor_(std::move(tensor)) {}
    const std::string& tensor() const noexcept { return tensor_; }

private:
    std::string tensor_;
};

/// A word cannot be represented in the closed vocabulary.
class VocabularyError : public Error {
public:
    explicit VocabularyError(std::string word)
        : Error("word not in vocabulary: '" + word + "'"), word_(std::move(word)) {}
    const std::string& word() const noexcept { return word_; }

private:
    std::string word_;
};

/// Override or lookup position is invalid for the sequence.
class PositionError : public Error {
public:
    using Error::Error;
};

/// Sequence longer than the model's positional table.
class LengthError : public Error {
public:
    using Error::Error;
};

/// A dataset item, lexicon or configuration violates its invariants.
class ValidationError : public Error {
public:
    ValidationError(std::string id, const std::string& what)
        : Error(id.empty() ? what : id + ": " + what), id_(std::move(id)) {}
    const std::string& id() const noexcept { return id_; }

private:
    std::string id_;
};

/// Every restart of an induction produced a non-finite loss.
class InductionError : public Error {
public:
    using Error::Error;
};

/// Input vectors are degenerate for a geometric operation.
class GeometryError : public Error {
public:
    using Error::Error;
};

}  // namespace mapp
