#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "adshield/classify.hpp"
#include "adshield/corpus.hpp"
#include "adshield/stats.hpp"

namespace adshield::report {

/// One (classifier, test set) row. Reference rows carry no odds ratio.
struct ReportRow {
  std::string classifier;
  std::string test_set;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::optional<double> odds_ratio;
  std::optional<double> ci_low;
  std::optional<double> ci_high;
  std::optional<double> p_value;
  bool significant = false;
};

struct Report {
  std::vector<ReportRow> rows;

  std::size_t odds_ratio_rows() const;
};

inline constexpr const char* kCsvHeader =
    "classifier,test_set,tp,fp,fn,tn,precision,recall,f1,odds_ratio,ci_low,ci_high,p_value,"
    "significant";

/// Sets `significant` jointly over every row with a p-value
/// (Benjamini-Hochberg at level q); rows without one are not significant.
void apply_fdr(Report& report, double q);

/// Predictions of every classifier, keyed classifier -> test set name.
using PredictionTable =
    std::map<std::string, std::map<std::string, std::vector<classify::PredictionRecord>>>;

/// Metrics rows for the reference and each variant, plus the odds ratio of
/// detecting a variant ad relative to the reference ad (over the reference
/// positive ids) for every (classifier, variant). Throws DataError when a
/// prediction set is missing.
Report robustness_report(const corpus::Dataset& reference,
                         const std::vector<corpus::Dataset>& variants,
                         const PredictionTable& predictions, const stats::StatConfig& config);

/// Mean Jaccard index of false-negative id sets for every classifier pair,
/// averaged over the reference and all variants.
struct OverlapRow {
  std::string classifier_a;
  std::string classifier_b;
  double mean_jaccard = 0.0;
};
std::vector<OverlapRow> false_negative_overlap(const corpus::Dataset& reference,
                                               const std::vector<corpus::Dataset>& variants,
                                               const PredictionTable& predictions);
void write_overlap(const std::vector<OverlapRow>& rows, const std::filesystem::path& path);

enum class ReportFormat { csv, structured };

/// "<stem>.plot.csv" next to the report.
std::filesystem::path plot_data_path(const std::filesystem::path& report_path);

/// Writes the report (numbers at 4 decimals) and its plot-data file
/// (classifier,test_set,or,ci_low,ci_high for rows with an odds ratio).
void write_report(const Report& report, const std::filesystem::path& path, ReportFormat format);

/// Reads either format, chosen by the file extension (.json is structured).
Report read_report(const std::filesystem::path& path);

}  // namespace adshield::report
