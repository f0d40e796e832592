#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace tugfall {

/// Raised when input data (recordings, tables) fails validation on load.
class IngestionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised for invalid parameters: filter cutoffs, window sizes, config fields.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when user-supplied values (override boundaries, table shapes) are inconsistent.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a spectrum does not support the requested feature.
class FeatureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Half-open sample range [start, end).
struct SampleRange {
  long start = 0;
  long end = 0;

  long size() const { return end - start; }
  bool operator==(const SampleRange&) const = default;
};

/// Automatic segmentation did not produce exactly three trials. Carries the
/// candidate ranges so a caller can show them and ask for a manual override.
class SegmentationAmbiguous : public std::runtime_error {
 public:
  SegmentationAmbiguous(const std::string& what, std::vector<SampleRange> candidates)
      : std::runtime_error(what), candidates_(std::move(candidates)) {}

  const std::vector<SampleRange>& candidates() const { return candidates_; }

 private:
  std::vector<SampleRange> candidates_;
};

}  // namespace tugfall
