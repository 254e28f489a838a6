// Copyright 2026 ASVLab Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef ASVLAB_CORE_ERROR_H_
#define ASVLAB_CORE_ERROR_H_

#include <stdexcept>
#include <string>

namespace asvlab {

enum class ErrorKind {
  kConfig,        // invalid configuration or precondition on settings
  kPrecondition,  // caller violated an operation precondition
  kFormat,        // malformed file / unsupported codec
  kRate,          // sample-rate mismatch
  kShape,         // length or dimension mismatch
  kLength,        // input shorter than a model's receptive field
  kCapability,    // operation unsupported by this object (e.g. no gradients)
  kLookup,        // unknown id
  kState,         // object not in the required state (untrained, uncalibrated)
  kCalibration,   // threshold calibration impossible (single-class data)
  kArgument,      // bad argument value (empty set, etc.)
  kDependency,    // missing upstream artifact
  kDegenerate,    // degenerate numeric input (zero-norm embedding)
  kTraining,      // training failed (non-convergence, collapse)
  kIo,            // filesystem error
};

const char* ErrorKindName(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(ErrorKindName(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace asvlab

#endif  // ASVLAB_CORE_ERROR_H_
