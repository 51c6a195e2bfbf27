#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace ecg {

// K x K counts; rows are the true class, columns the predicted class.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t k);

  std::size_t k() const { return k_; }
  std::uint64_t& at(std::size_t true_cls, std::size_t pred_cls) {
    return counts_[true_cls * k_ + pred_cls];
  }
  std::uint64_t at(std::size_t true_cls, std::size_t pred_cls) const {
    return counts_[true_cls * k_ + pred_cls];
  }

  std::uint64_t row_sum(std::size_t true_cls) const;  // class support
  std::uint64_t col_sum(std::size_t pred_cls) const;
  std::uint64_t trace() const;
  std::uint64_t total() const;

  bool operator==(const ConfusionMatrix&) const = default;

 private:
  std::size_t k_;
  std::vector<std::uint64_t> counts_;
};

ConfusionMatrix confusion_matrix(std::span<const int> y_true,
                                 std::span<const int> y_pred, std::size_t k);

// One-vs-rest metrics per class. Any 0/0 is 0 by convention, never NaN.
struct ClassMetrics {
  double mcc = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::uint64_t support = 0;

  bool operator==(const ClassMetrics&) const = default;
};

double f1_score(double precision, double recall);

std::vector<ClassMetrics> per_class_metrics(const ConfusionMatrix& cm);

struct Aggregates {
  double accuracy = 0.0;
  double macro_precision = 0.0, macro_recall = 0.0, macro_f1 = 0.0;
  double weighted_precision = 0.0, weighted_recall = 0.0, weighted_f1 = 0.0;

  bool operator==(const Aggregates&) const = default;
};

Aggregates aggregate(const ConfusionMatrix& cm,
                     std::span<const ClassMetrics> per_class);

struct MetricsReport {
  ConfusionMatrix cm{0};
  std::vector<ClassMetrics> per_class;
  Aggregates agg;

  bool operator==(const MetricsReport&) const = default;
};

MetricsReport evaluate(std::span<const int> y_true, std::span<const int> y_pred,
                       std::size_t k);

enum class ReportFormat { PlainTable, Json, CsvPack };

// PlainTable mirrors the per-class table layout (MCC / Precision / Recall /
// F1-Score / support rows plus Accuracy, Macro Avg, Weighted Avg) with
// values rounded to two decimals. Json and CsvPack carry full precision;
// CsvPack is a confusion-matrix CSV section followed by a per-class metrics
// CSV section. Output is byte-stable for identical reports.
std::string render_report(const MetricsReport& report, ReportFormat format);

std::string confusion_to_csv(const ConfusionMatrix& cm);

nlohmann::json report_to_json(const MetricsReport& report);
MetricsReport report_from_json(const nlohmann::json& j);

}  // namespace ecg
