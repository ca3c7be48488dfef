#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace semicomp {

// Argument outside the domain of a survival/copula function.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Malformed or unreadable input data.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class QuadratureError : public std::runtime_error {
 public:
  QuadratureError(const std::string& what, double best_estimate, double achieved_error)
      : std::runtime_error(what), best_estimate_(best_estimate), achieved_error_(achieved_error) {}

  double best_estimate() const { return best_estimate_; }
  double achieved_error() const { return achieved_error_; }

 private:
  double best_estimate_;
  double achieved_error_;
};

// A per-record likelihood contribution failed; carries the record index.
class LikelihoodError : public std::runtime_error {
 public:
  LikelihoodError(const std::string& what, std::size_t record_index)
      : std::runtime_error(what), record_index_(record_index) {}

  std::size_t record_index() const { return record_index_; }

 private:
  std::size_t record_index_;
};

}  // namespace semicomp
