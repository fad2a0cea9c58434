#pragma once

#include <stdexcept>
#include <string>

namespace guardfl {

// Invalid user-supplied configuration (bad counts, thresholds, enum values).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Mismatched vector lengths or layer layouts.
class ShapeError : public std::runtime_error {
 public:
  explicit ShapeError(const std::string& what) : std::runtime_error(what) {}
};

// Empty or malformed datasets.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Metric requested on an empty or ineligible sample set.
class MetricError : public std::runtime_error {
 public:
  explicit MetricError(const std::string& what) : std::runtime_error(what) {}
};

// Client-graph construction failures (too few participants, empty selection).
class GraphError : public std::runtime_error {
 public:
  explicit GraphError(const std::string& what) : std::runtime_error(what) {}
};

// Aggregation over an empty record set.
class AggregationError : public std::runtime_error {
 public:
  explicit AggregationError(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite values where the algorithm requires finite ones.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace guardfl
