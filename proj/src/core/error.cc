// Copyright 2026 ASVLab Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "asvlab/core/error.h"

namespace asvlab {

const char* ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig: return "configuration error";
    case ErrorKind::kPrecondition: return "precondition error";
    case ErrorKind::kFormat: return "format error";
    case ErrorKind::kRate: return "rate error";
    case ErrorKind::kShape: return "shape error";
    case ErrorKind::kLength: return "length error";
    case ErrorKind::kCapability: return "capability error";
    case ErrorKind::kLookup: return "lookup error";
    case ErrorKind::kState: return "state error";
    case ErrorKind::kCalibration: return "calibration error";
    case ErrorKind::kArgument: return "argument error";
    case ErrorKind::kDependency: return "dependency error";
    case ErrorKind::kDegenerate: return "degenerate-embedding error";
    case ErrorKind::kTraining: return "training error";
    case ErrorKind::kIo: return "io error";
  }
  return "error";
}

}  // namespace asvlab
