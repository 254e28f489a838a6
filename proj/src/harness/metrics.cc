// Copyright 2026 ASVLab Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "asvlab/harness/metrics.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "asvlab/core/error.h"

namespace asvlab {

namespace {

void CheckPaired(const std::vector<double>& scores,
                 const std::vector<int>& labels) {
  if (scores.size() != labels.size())
    throw Error(ErrorKind::kShape, "scores and labels differ in length");
  if (scores.empty())
    throw Error(ErrorKind::kArgument, "empty score set");
  for (int l : labels)
    if (l != 0 && l != 1)
      throw Error(ErrorKind::kArgument, "labels must be 0 or 1");
}

void RequireBothClasses(const std::vector<int>& labels) {
  bool has0 = false, has1 = false;
  for (int l : labels) (l ? has1 : has0) = true;
  if (!has0 || !has1)
    throw Error(ErrorKind::kCalibration,
                "metric needs both classes in the score set");
}

}  // namespace

EerResult ComputeEer(const std::vector<double>& scores,
                     const std::vector<int>& labels) {
  CheckPaired(scores, labels);
  RequireBothClasses(labels);

  const size_t n = scores.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return scores[a] < scores[b]; });

  size_t n0 = 0, n1 = 0;
  for (int l : labels) (l ? n1 : n0)++;

  // Blocks of equal score values, with per-block label counts.
  std::vector<double> values;
  std::vector<size_t> block0, block1;
  for (size_t i = 0; i < n;) {
    size_t j = i;
    size_t c0 = 0, c1 = 0;
    while (j < n && scores[order[j]] == scores[order[i]]) {
      (labels[order[j]] ? c1 : c0)++;
      ++j;
    }
    values.push_back(scores[order[i]]);
    block0.push_back(c0);
    block1.push_back(c1);
    i = j;
  }
  const size_t d = values.size();

  // Candidate thresholds: below min, midpoints, above max. At candidate i,
  // the first i blocks fall below the threshold.
  std::vector<double> cand(d + 1);
  cand[0] = values.front() - 1.0;
  for (size_t i = 1; i < d; ++i) cand[i] = 0.5 * (values[i - 1] + values[i]);
  cand[d] = values.back() + 1.0;

  std::vector<double> far(d + 1), frr(d + 1);
  size_t below0 = 0, below1 = 0;
  for (size_t i = 0; i <= d; ++i) {
    if (i > 0) {
      below0 += block0[i - 1];
      below1 += block1[i - 1];
    }
    far[i] = static_cast<double>(n0 - below0) / static_cast<double>(n0);
    frr[i] = static_cast<double>(below1) / static_cast<double>(n1);
  }

  // diff = FAR - FRR runs monotonically from +1 to -1.
  auto diff = [&](size_t i) { return far[i] - frr[i]; };

  // Exact-zero plateau: EER is constant across it; threshold = its midpoint.
  size_t first_zero = d + 1, last_zero = d + 1;
  for (size_t i = 0; i <= d; ++i) {
    if (diff(i) == 0.0) {
      if (first_zero == d + 1) first_zero = i;
      last_zero = i;
    }
  }
  if (first_zero != d + 1) {
    return {far[first_zero], 0.5 * (cand[first_zero] + cand[last_zero])};
  }

  for (size_t i = 0; i + 1 <= d; ++i) {
    const double a = diff(i), b = diff(i + 1);
    if (a > 0.0 && b < 0.0) {
      const double lam = a / (a - b);
      const double eer = far[i] + lam * (far[i + 1] - far[i]);
      const double thr = cand[i] + lam * (cand[i + 1] - cand[i]);
      return {eer, thr};
    }
  }
  throw Error(ErrorKind::kCalibration, "no FAR/FRR crossing found");
}

double ComputeAuc(const std::vector<double>& scores,
                  const std::vector<int>& labels) {
  CheckPaired(scores, labels);
  RequireBothClasses(labels);

  const size_t n = scores.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return scores[a] < scores[b]; });

  // Average ranks over tie groups, 1-based.
  std::vector<double> rank(n);
  for (size_t i = 0; i < n;) {
    size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double avg = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
    for (size_t k = i; k < j; ++k) rank[order[k]] = avg;
    i = j;
  }

  double n0 = 0, n1 = 0, rank_sum1 = 0;
  for (size_t i = 0; i < n; ++i) {
    if (labels[i]) {
      n1 += 1;
      rank_sum1 += rank[i];
    } else {
      n0 += 1;
    }
  }
  return (rank_sum1 - n1 * (n1 + 1) / 2.0) / (n0 * n1);
}

FarFrr ComputeFarFrr(const std::vector<double>& scores,
                     const std::vector<int>& labels, double threshold) {
  CheckPaired(scores, labels);
  size_t n0 = 0, n1 = 0, fa = 0, fr = 0;
  for (size_t i = 0; i < scores.size(); ++i) {
    if (labels[i]) {
      ++n1;
      if (scores[i] < threshold) ++fr;
    } else {
      ++n0;
      if (scores[i] >= threshold) ++fa;
    }
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  return {n0 ? static_cast<double>(fa) / n0 : nan,
          n1 ? static_cast<double>(fr) / n1 : nan};
}

Metrics ComputeMetrics(const std::vector<double>& scores,
                       const std::vector<int>& labels,
                       std::optional<double> threshold) {
  const EerResult eer = ComputeEer(scores, labels);
  const double thr = threshold.value_or(eer.threshold);
  const FarFrr ff = ComputeFarFrr(scores, labels, thr);
  return {eer.eer, ComputeAuc(scores, labels), ff.far, ff.frr, thr};
}

}  // namespace asvlab
