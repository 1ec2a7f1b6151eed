#pragma once

#include <stdexcept>
#include <string>

namespace precedent {

// Base class for every diagnostic raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when an input document cannot be admitted to the corpus.
class DocumentRejected : public Error {
 public:
  DocumentRejected(std::string document_id, const std::string& reason)
      : Error("document '" + document_id + "' rejected: " + reason),
        document_id_(std::move(document_id)) {}

  const std::string& document_id() const noexcept { return document_id_; }

 private:
  std::string document_id_;
};

}  // namespace precedent
