#include "adshield/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "adshield/error.hpp"

namespace adshield::stats {

void validate(const StatConfig& config) {
  if (!(config.alpha > 0 && config.alpha < 1)) throw InvalidArgument("alpha must lie in (0,1)");
  if (!(config.fdr_q > 0 && config.fdr_q < 1)) throw InvalidArgument("fdr q must lie in (0,1)");
  if (!(config.z > 0)) throw InvalidArgument("z must be positive");
}

// erfc from the C library (absolute error far below 1e-7 on glibc).
double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double two_sided_z(double alpha) {
  if (!(alpha > 0 && alpha < 1)) throw InvalidArgument("alpha must lie in (0,1)");
  double lo = 0.0, hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (std::erfc(mid / std::sqrt(2.0)) > alpha) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

OddsRatioResult odds_ratio(const evaluate::ContingencyTable& table, const StatConfig& config) {
  double a = static_cast<double>(table.tp_new);
  double b = static_cast<double>(table.fn_new);
  double c = static_cast<double>(table.tp_ref);
  double d = static_cast<double>(table.fn_ref);
  if (a + b + c + d == 0) throw InvalidArgument("odds_ratio: all cells are zero");

  OddsRatioResult r;
  if (a == 0 || b == 0 || c == 0 || d == 0) {
    a += 0.5;
    b += 0.5;
    c += 0.5;
    d += 0.5;
    r.corrected = true;
  }
  const double log_or = std::log(a) - std::log(b) - std::log(c) + std::log(d);
  r.log_se = std::sqrt(1.0 / a + 1.0 / b + 1.0 / c + 1.0 / d);
  r.odds_ratio = std::exp(log_or);
  r.ci_low = std::exp(log_or - config.z * r.log_se);
  r.ci_high = std::exp(log_or + config.z * r.log_se);
  const double zstat = log_or / r.log_se;
  r.p_value = std::min(1.0, std::erfc(std::abs(zstat) / std::sqrt(2.0)));
  return r;
}

std::vector<bool> benjamini_hochberg(const std::vector<double>& p_values, double q) {
  if (!(q > 0 && q < 1)) throw InvalidArgument("benjamini_hochberg: q must lie in (0,1)");
  for (double p : p_values)
    if (!(p >= 0 && p <= 1)) throw InvalidArgument("benjamini_hochberg: p-value outside [0,1]");
  const std::size_t m = p_values.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return p_values[i] < p_values[j]; });
  std::size_t k_star = 0;
  for (std::size_t k = m; k >= 1; --k) {
    if (p_values[order[k - 1]] <= static_cast<double>(k) * q / static_cast<double>(m)) {
      k_star = k;
      break;
    }
  }
  std::vector<bool> reject(m, false);
  if (k_star == 0) return reject;
  const double cutoff = p_values[order[k_star - 1]];
  for (std::size_t i = 0; i < m; ++i) reject[i] = p_values[i] <= cutoff;
  return reject;
}

double jaccard_index(const std::set<std::string>& a, const std::set<std::string>& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t inter = 0;
  for (const auto& x : a) inter += b.count(x);
  const std::size_t uni = a.size() + b.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

double mean(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

}  // namespace adshield::stats
