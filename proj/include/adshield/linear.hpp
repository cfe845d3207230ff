#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "adshield/features.hpp"

namespace adshield::classify {

enum class SvmLoss { hinge, squared_hinge };

struct LinearSvmConfig {
  double C = 1.0;
  SvmLoss loss = SvmLoss::hinge;
  int max_epochs = 1000;
  /// Stop when the projected-gradient spread of an epoch falls below this.
  double tolerance = 1e-6;
  bool lowercase_inputs = false;
  std::uint64_t seed = 0;
};

struct LinearMarginModel {
  std::vector<double> weights;
  double bias = 0.0;
  double C = 1.0;
  SvmLoss loss = SvmLoss::hinge;
  bool lowercase_inputs = false;
  bool calibrated = false;
  double platt_a = 0.0;
  double platt_b = 0.0;
  double threshold = 0.5;

  double decision(std::span<const double> x) const;
  /// 1 / (1 + exp(a*s + b)) of the decision score s. Requires calibration.
  double probability(std::span<const double> x) const;
};

/// Primal objective (1/2)|w|^2 + C * sum loss(1 - y(w.x + b)) with an
/// unregularized bias.
double svm_objective(const std::vector<double>& weights, double bias,
                     const std::vector<features::FeatureVector>& vectors,
                     const std::vector<bool>& labels, double C, SvmLoss loss);

/// Dual coordinate descent with a seeded per-epoch shuffle, followed by
/// alternating exact bias and fixed-bias weight refinements so the bias is
/// not regularized. Throws InvalidArgument on single-class or non-finite input.
LinearMarginModel train_linear_svm(const std::vector<features::FeatureVector>& vectors,
                                   const std::vector<bool>& labels,
                                   const LinearSvmConfig& config);

struct PlattParams {
  double a = 0.0;
  double b = 0.0;
  int iterations = 0;
};

/// 1 / (1 + exp(a*s + b)), evaluated without overflow.
double platt_probability(double score, double a, double b);

/// Negative log-likelihood of the sigmoid-mapped scores against the
/// prior-corrected targets t+ = (N+ + 1)/(N+ + 2), t- = 1/(N- + 2).
double platt_nll(std::span<const double> scores, const std::vector<bool>& labels, double a,
                 double b);

/// Newton's method with backtracking on platt_nll; stops when the gradient
/// norm drops below 1e-8. Throws InvalidArgument on single-class input.
PlattParams calibrate_platt(std::span<const double> scores, const std::vector<bool>& labels);

struct ThresholdChoice {
  double threshold = 0.5;
  double f1 = 0.0;
};

/// Threshold maximizing F1 of (prob >= t) over the candidates {0, 1} and
/// midpoints between consecutive distinct probabilities; ties go to the
/// largest threshold.
ThresholdChoice tune_threshold(std::span<const double> probs, const std::vector<bool>& labels);

/// F1 of (prob >= threshold) against labels.
double f1_at(std::span<const double> probs, const std::vector<bool>& labels, double threshold);

}  // namespace adshield::classify
