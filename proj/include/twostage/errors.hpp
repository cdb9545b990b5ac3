#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace twostage {

// Base of every error thrown by the library. `kind()` is a stable tag that
// reports and logs use instead of the free-form message.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

// Input data is unusable (maps to CLI exit code 3).
class DataError : public Error {
 public:
  using Error::Error;
};

// A configuration value is out of range or inconsistent (CLI exit code 2).
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error("ConfigError", what) {}
};

class DimensionMismatch : public Error {
 public:
  explicit DimensionMismatch(const std::string& what) : Error("DimensionMismatch", what) {}
};

class RankDeficient : public Error {
 public:
  explicit RankDeficient(const std::string& what) : Error("RankDeficient", what) {}
};

class DegenerateBiomarker : public Error {
 public:
  explicit DegenerateBiomarker(std::size_t index)
      : Error("DegenerateBiomarker",
              "biomarker " + std::to_string(index + 1) + " is constant"),
        index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

class SingleArm : public Error {
 public:
  SingleArm() : Error("SingleArm", "both treatment arms must be present for an interaction fit") {}
};

class Separation : public Error {
 public:
  explicit Separation(const std::string& what) : Error("Separation", what) {}
};

class InvalidRanking : public Error {
 public:
  explicit InvalidRanking(const std::string& what) : Error("InvalidRanking", what) {}
};

class NoInteractionCluster : public Error {
 public:
  NoInteractionCluster()
      : Error("NoInteractionCluster", "scenario has no biomarker with an interaction effect") {}
};

class IndexHasInteraction : public Error {
 public:
  explicit IndexHasInteraction(std::size_t index)
      : Error("IndexHasInteraction",
              "biomarker " + std::to_string(index + 1) + " carries an interaction effect") {}
};

class InsufficientPairs : public Error {
 public:
  explicit InsufficientPairs(std::size_t n)
      : Error("InsufficientPairs",
              "correlation needs at least 3 pairs, got " + std::to_string(n)) {}
};

class InvalidDataset : public DataError {
 public:
  explicit InvalidDataset(const std::string& what) : DataError("InvalidDataset", what) {}
};

class NonBinaryTreatment : public DataError {
 public:
  explicit NonBinaryTreatment(const std::string& what) : DataError("NonBinaryTreatment", what) {}
};

class EmptyAfterFiltering : public DataError {
 public:
  explicit EmptyAfterFiltering(const std::string& what) : DataError("EmptyAfterFiltering", what) {}
};

class NonNumericCell : public DataError {
 public:
  NonNumericCell(std::size_t row, std::size_t col, const std::string& column, const std::string& text)
      : DataError("NonNumericCell", "non-numeric cell '" + text + "' at row " + std::to_string(row) +
                                        ", column " + std::to_string(col) + " (" + column + ")"),
        row_(row),
        col_(col) {}
  std::size_t row() const noexcept { return row_; }
  std::size_t col() const noexcept { return col_; }

 private:
  std::size_t row_;
  std::size_t col_;
};

}  // namespace twostage
