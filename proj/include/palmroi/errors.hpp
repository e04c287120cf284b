#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace palmroi {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input data is malformed (bad file, bad name, bad parameters).
class DataError : public Error {
 public:
  using Error::Error;
};

/// The ROI pipeline could not produce a result for the given input.
class PipelineError : public Error {
 public:
  using Error::Error;
};

class DegenerateAnnotation : public PipelineError {
 public:
  using PipelineError::PipelineError;
};

class DegenerateTriple : public PipelineError {
 public:
  using PipelineError::PipelineError;
};

class PointOutOfCanvas : public DataError {
 public:
  using DataError::DataError;
};

class BackendFailure : public PipelineError {
 public:
  using PipelineError::PipelineError;
};

class ZeroVector : public PipelineError {
 public:
  using PipelineError::PipelineError;
};

class NotNormalized : public Error {
 public:
  using Error::Error;
};

class EmptyGallery : public DataError {
 public:
  using DataError::DataError;
};

class MalformedName : public DataError {
 public:
  MalformedName(std::string name, std::size_t position, const std::string& what)
      : DataError("malformed sample name '" + name + "' at position " +
                  std::to_string(position) + ": " + what),
        name_(std::move(name)),
        position_(position) {}

  const std::string& name() const noexcept { return name_; }
  std::size_t position() const noexcept { return position_; }

 private:
  std::string name_;
  std::size_t position_;
};

class TooFewSubjects : public DataError {
 public:
  using DataError::DataError;
};

class MissingFeature : public DataError {
 public:
  using DataError::DataError;
};

class EmptyScores : public DataError {
 public:
  using DataError::DataError;
};

class InsufficientImages : public DataError {
 public:
  using DataError::DataError;
};

}  // namespace palmroi
