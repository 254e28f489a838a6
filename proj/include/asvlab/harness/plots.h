// Copyright 2026 ASVLab Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Deterministic SVG diagnostics: DET curves and score histograms.
// Rendering is plain text generation, so identical inputs give
// byte-identical files on every platform.

#ifndef ASVLAB_HARNESS_PLOTS_H_
#define ASVLAB_HARNESS_PLOTS_H_

#include <string>
#include <vector>

namespace asvlab {

struct DetPoint {
  double threshold = 0.0;
  double far = 0.0;  // fraction of label-0 samples at or above threshold
  double frr = 0.0;  // fraction of label-1 samples below threshold
};

// Full threshold sweep over the same candidate set the EER solver uses:
// one sentinel below the minimum score, midpoints between distinct scores,
// one sentinel above the maximum. The first point is always (FAR=1, FRR=0)
// and the last (FAR=0, FRR=1). Both classes must be present.
std::vector<DetPoint> DetSweep(const std::vector<double>& scores,
                               const std::vector<int>& labels);

void WriteDetCurveSvg(const std::string& path,
                      const std::vector<DetPoint>& points,
                      const std::string& title);

void WriteScoreHistogramSvg(const std::string& path,
                            const std::vector<double>& bona,
                            const std::vector<double>& adv, int bins,
                            const std::string& title);

}  // namespace asvlab

#endif  // ASVLAB_HARNESS_PLOTS_H_
