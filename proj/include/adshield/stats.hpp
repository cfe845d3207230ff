#pragma once

#include <set>
#include <string>
#include <vector>

#include "adshield/evaluate.hpp"

namespace adshield::stats {

struct StatConfig {
  double alpha = 0.05;
  double fdr_q = 0.05;
  double z = 1.959963984540054;  // two-sided 95%
};

/// Throws InvalidArgument unless 0 < alpha < 1, 0 < fdr_q < 1 and z > 0.
void validate(const StatConfig& config);

struct OddsRatioResult {
  double odds_ratio = 1.0;
  double ci_low = 1.0;
  double ci_high = 1.0;
  double p_value = 1.0;
  double log_se = 0.0;
  /// Haldane-Anscombe +0.5 was added to every cell because one was zero.
  bool corrected = false;

  /// The confidence interval excludes 1.
  bool significant() const { return ci_low > 1.0 || ci_high < 1.0; }
};

/// Standard normal CDF.
double normal_cdf(double x);

/// Critical value z with P(|Z| > z) = alpha.
double two_sided_z(double alpha);

/// OR = (tp_new/fn_new) / (tp_ref/fn_ref) with a Wald interval on ln OR and
/// a two-sided Wald p-value. Throws InvalidArgument on an all-zero table.
OddsRatioResult odds_ratio(const evaluate::ContingencyTable& table,
                           const StatConfig& config = {});

/// Step-up FDR control; returns rejection flags in input order. Throws
/// InvalidArgument on p outside [0,1] or q outside (0,1).
std::vector<bool> benjamini_hochberg(const std::vector<double>& p_values, double q);

/// |A ∩ B| / |A ∪ B|; 1.0 when both sets are empty.
double jaccard_index(const std::set<std::string>& a, const std::set<std::string>& b);

double mean(const std::vector<double>& values);

}  // namespace adshield::stats
