// Copyright 2026 ASVLab Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Shared evaluation metrics. Convention: label 1 is the positive class
// (same-speaker for ASV, adversarial for detection); decisions accept a
// sample as positive when score >= threshold. FAR is the fraction of
// label-0 samples at or above the threshold, FRR the fraction of label-1
// samples below it.

#ifndef ASVLAB_HARNESS_METRICS_H_
#define ASVLAB_HARNESS_METRICS_H_

#include <optional>
#include <vector>

namespace asvlab {

struct EerResult {
  double eer = 0.0;
  double threshold = 0.0;
};

// Equal error rate via a sweep over midpoints of adjacent distinct scores
// plus sentinels below the minimum and above the maximum. FAR - FRR is
// monotone non-increasing over that sweep; the EER and threshold are taken
// by linear interpolation at the sign change (or the midpoint of the
// exact-zero plateau). Throws a calibration error unless both labels occur.
EerResult ComputeEer(const std::vector<double>& scores,
                     const std::vector<int>& labels);

// Area under the ROC curve by the rank statistic; ties count 0.5.
// Throws a calibration error unless both labels occur.
double ComputeAuc(const std::vector<double>& scores,
                  const std::vector<int>& labels);

// FAR/FRR at a fixed threshold. A class that is absent yields NaN for its
// rate; the present class is still computed.
struct FarFrr {
  double far = 0.0;
  double frr = 0.0;
};
FarFrr ComputeFarFrr(const std::vector<double>& scores,
                     const std::vector<int>& labels, double threshold);

struct Metrics {
  double eer = 0.0;
  double auc = 0.0;
  double far = 0.0;
  double frr = 0.0;
  double threshold = 0.0;
};

// EER + AUC + FAR/FRR at the given threshold (EER threshold when absent).
Metrics ComputeMetrics(const std::vector<double>& scores,
                       const std::vector<int>& labels,
                       std::optional<double> threshold = std::nullopt);

}  // namespace asvlab

#endif  // ASVLAB_HARNESS_METRICS_H_
