#include "ecg/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>

#include "ecg/errors.hpp"

namespace ecg {

ConfusionMatrix::ConfusionMatrix(std::size_t k) : k_(k), counts_(k * k, 0) {}

std::uint64_t ConfusionMatrix::row_sum(std::size_t true_cls) const {
  std::uint64_t s = 0;
  for (std::size_t j = 0; j < k_; ++j) s += at(true_cls, j);
  return s;
}

std::uint64_t ConfusionMatrix::col_sum(std::size_t pred_cls) const {
  std::uint64_t s = 0;
  for (std::size_t i = 0; i < k_; ++i) s += at(i, pred_cls);
  return s;
}

std::uint64_t ConfusionMatrix::trace() const {
  std::uint64_t s = 0;
  for (std::size_t i = 0; i < k_; ++i) s += at(i, i);
  return s;
}

std::uint64_t ConfusionMatrix::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

ConfusionMatrix confusion_matrix(std::span<const int> y_true,
                                 std::span<const int> y_pred, std::size_t k) {
  if (y_true.size() != y_pred.size()) {
    throw DataError("confusion_matrix: " + std::to_string(y_true.size()) +
                    " true labels vs " + std::to_string(y_pred.size()) +
                    " predictions");
  }
  ConfusionMatrix cm(k);
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const int t = y_true[i], p = y_pred[i];
    if (t < 0 || static_cast<std::size_t>(t) >= k || p < 0 ||
        static_cast<std::size_t>(p) >= k) {
      throw DataError("confusion_matrix: label pair (" + std::to_string(t) +
                      "," + std::to_string(p) + ") at index " +
                      std::to_string(i) + " outside [0," + std::to_string(k) +
                      ")");
    }
    ++cm.at(static_cast<std::size_t>(t), static_cast<std::size_t>(p));
  }
  return cm;
}

namespace {

double safe_div(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

}  // namespace

double f1_score(double precision, double recall) {
  return safe_div(2.0 * precision * recall, precision + recall);
}

std::vector<ClassMetrics> per_class_metrics(const ConfusionMatrix& cm) {
  const std::size_t k = cm.k();
  const double total = static_cast<double>(cm.total());
  std::vector<ClassMetrics> out(k);
  for (std::size_t c = 0; c < k; ++c) {
    const double tp = static_cast<double>(cm.at(c, c));
    const double fn = static_cast<double>(cm.row_sum(c)) - tp;
    const double fp = static_cast<double>(cm.col_sum(c)) - tp;
    const double tn = total - tp - fn - fp;
    ClassMetrics& m = out[c];
    m.support = cm.row_sum(c);
    m.precision = safe_div(tp, tp + fp);
    m.recall = safe_div(tp, tp + fn);
    m.f1 = f1_score(m.precision, m.recall);
    const double denom =
        std::sqrt((tp + fp) * (tp + fn) * (tn + fp) * (tn + fn));
    m.mcc = safe_div(tp * tn - fp * fn, denom);
  }
  return out;
}

Aggregates aggregate(const ConfusionMatrix& cm,
                     std::span<const ClassMetrics> per_class) {
  if (cm.k() == 0 || cm.total() == 0) {
    throw DataError("aggregate: empty confusion matrix");
  }
  Aggregates a;
  const double total = static_cast<double>(cm.total());
  a.accuracy = static_cast<double>(cm.trace()) / total;
  for (const ClassMetrics& m : per_class) {
    const double w = static_cast<double>(m.support) / total;
    a.macro_precision += m.precision;
    a.macro_recall += m.recall;
    a.macro_f1 += m.f1;
    a.weighted_precision += w * m.precision;
    a.weighted_recall += w * m.recall;
    a.weighted_f1 += w * m.f1;
  }
  const double k = static_cast<double>(per_class.size());
  a.macro_precision /= k;
  a.macro_recall /= k;
  a.macro_f1 /= k;
  return a;
}

MetricsReport evaluate(std::span<const int> y_true, std::span<const int> y_pred,
                       std::size_t k) {
  MetricsReport r;
  r.cm = confusion_matrix(y_true, y_pred, k);
  r.per_class = per_class_metrics(r.cm);
  r.agg = aggregate(r.cm, r.per_class);
  return r;
}

namespace {

std::string two_dec(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string render_plain(const MetricsReport& r) {
  std::string out;
  out += "            MCC  Precision  Recall  F1-Score  Support\n";
  char line[128];
  for (std::size_t c = 0; c < r.per_class.size(); ++c) {
    const ClassMetrics& m = r.per_class[c];
    std::snprintf(line, sizeof(line),
                  "Class %zu    %5s  %9s  %6s  %8s  %7llu\n", c,
                  two_dec(m.mcc).c_str(), two_dec(m.precision).c_str(),
                  two_dec(m.recall).c_str(), two_dec(m.f1).c_str(),
                  static_cast<unsigned long long>(m.support));
    out += line;
  }
  std::snprintf(line, sizeof(line), "Accuracy   %33s  %8s  %7llu\n", "",
                two_dec(r.agg.accuracy).c_str(),
                static_cast<unsigned long long>(r.cm.total()));
  out += line;
  std::snprintf(line, sizeof(line),
                "Macro Avg  %5s  %9s  %6s  %8s  %7llu\n", "",
                two_dec(r.agg.macro_precision).c_str(),
                two_dec(r.agg.macro_recall).c_str(),
                two_dec(r.agg.macro_f1).c_str(),
                static_cast<unsigned long long>(r.cm.total()));
  out += line;
  std::snprintf(line, sizeof(line),
                "Weighted Avg  %2s  %9s  %6s  %8s  %7llu\n", "",
                two_dec(r.agg.weighted_precision).c_str(),
                two_dec(r.agg.weighted_recall).c_str(),
                two_dec(r.agg.weighted_f1).c_str(),
                static_cast<unsigned long long>(r.cm.total()));
  out += line;
  return out;
}

std::string format_full(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string render_csv_pack(const MetricsReport& r) {
  std::string out = confusion_to_csv(r.cm);
  out += "\n";
  out += "class,mcc,precision,recall,f1,support\n";
  for (std::size_t c = 0; c < r.per_class.size(); ++c) {
    const ClassMetrics& m = r.per_class[c];
    out += std::to_string(c) + "," + format_full(m.mcc) + "," +
           format_full(m.precision) + "," + format_full(m.recall) + "," +
           format_full(m.f1) + "," + std::to_string(m.support) + "\n";
  }
  out += "accuracy," + format_full(r.agg.accuracy) + "\n";
  out += "macro,," + format_full(r.agg.macro_precision) + "," +
         format_full(r.agg.macro_recall) + "," + format_full(r.agg.macro_f1) +
         ",\n";
  out += "weighted,," + format_full(r.agg.weighted_precision) + "," +
         format_full(r.agg.weighted_recall) + "," +
         format_full(r.agg.weighted_f1) + ",\n";
  return out;
}

}  // namespace

std::string confusion_to_csv(const ConfusionMatrix& cm) {
  std::string out = "true\\pred";
  for (std::size_t j = 0; j < cm.k(); ++j) out += "," + std::to_string(j);
  out += "\n";
  for (std::size_t i = 0; i < cm.k(); ++i) {
    out += std::to_string(i);
    for (std::size_t j = 0; j < cm.k(); ++j) {
      out += "," + std::to_string(cm.at(i, j));
    }
    out += "\n";
  }
  return out;
}

std::string render_report(const MetricsReport& report, ReportFormat format) {
  switch (format) {
    case ReportFormat::PlainTable:
      return render_plain(report);
    case ReportFormat::Json:
      return report_to_json(report).dump(2) + "\n";
    case ReportFormat::CsvPack:
      return render_csv_pack(report);
  }
  throw std::invalid_argument("render_report: unknown format");
}

nlohmann::json report_to_json(const MetricsReport& report) {
  nlohmann::json j;
  j["k"] = report.cm.k();
  auto& rows = j["confusion"] = nlohmann::json::array();
  for (std::size_t i = 0; i < report.cm.k(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t c = 0; c < report.cm.k(); ++c) {
      row.push_back(report.cm.at(i, c));
    }
    rows.push_back(std::move(row));
  }
  auto& per_class = j["per_class"] = nlohmann::json::array();
  for (std::size_t c = 0; c < report.per_class.size(); ++c) {
    const ClassMetrics& m = report.per_class[c];
    per_class.push_back({{"class", c},
                         {"mcc", m.mcc},
                         {"precision", m.precision},
                         {"recall", m.recall},
                         {"f1", m.f1},
                         {"support", m.support}});
  }
  j["accuracy"] = report.agg.accuracy;
  j["macro"] = {{"precision", report.agg.macro_precision},
                {"recall", report.agg.macro_recall},
                {"f1", report.agg.macro_f1}};
  j["weighted"] = {{"precision", report.agg.weighted_precision},
                   {"recall", report.agg.weighted_recall},
                   {"f1", report.agg.weighted_f1}};
  return j;
}

MetricsReport report_from_json(const nlohmann::json& j) {
  MetricsReport r;
  const std::size_t k = j.at("k").get<std::size_t>();
  r.cm = ConfusionMatrix(k);
  const auto& rows = j.at("confusion");
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t c = 0; c < k; ++c) {
      r.cm.at(i, c) = rows.at(i).at(c).get<std::uint64_t>();
    }
  }
  for (const auto& e : j.at("per_class")) {
    ClassMetrics m;
    m.mcc = e.at("mcc").get<double>();
    m.precision = e.at("precision").get<double>();
    m.recall = e.at("recall").get<double>();
    m.f1 = e.at("f1").get<double>();
    m.support = e.at("support").get<std::uint64_t>();
    r.per_class.push_back(m);
  }
  r.agg.accuracy = j.at("accuracy").get<double>();
  r.agg.macro_precision = j.at("macro").at("precision").get<double>();
  r.agg.macro_recall = j.at("macro").at("recall").get<double>();
  r.agg.macro_f1 = j.at("macro").at("f1").get<double>();
  r.agg.weighted_precision = j.at("weighted").at("precision").get<double>();
  r.agg.weighted_recall = j.at("weighted").at("recall").get<double>();
  r.agg.weighted_f1 = j.at("weighted").at("f1").get<double>();
  return r;
}

}  // namespace ecg
