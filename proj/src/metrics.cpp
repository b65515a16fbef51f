#include "offroad/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace offroad::metrics {

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t t = 0;
  for (const auto& row : counts)
    for (auto v : row) t += v;
  return t;
}

std::uint64_t ConfusionMatrix::trace() const {
  std::uint64_t t = 0;
  for (int c = 0; c < kNumClasses; ++c) t += counts[c][c];
  return t;
}

std::uint64_t ConfusionMatrix::row_sum(int g) const {
  std::uint64_t t = 0;
  for (auto v : counts[g]) t += v;
  return t;
}

std::uint64_t ConfusionMatrix::column_sum(int p) const {
  std::uint64_t t = 0;
  for (const auto& row : counts) t += row[p];
  return t;
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  for (int g = 0; g < kNumClasses; ++g)
    for (int p = 0; p < kNumClasses; ++p) counts[g][p] += other.counts[g][p];
  ignored += other.ignored;
  return *this;
}

ConfusionMatrix confusion_matrix(const LabelMap& pred, const LabelMap& gt) {
  require_same_size(pred, gt, "confusion_matrix");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const auto g = gt.data[i];
    if (g >= kNumClasses) {
      ++cm.ignored;
      continue;
    }
    const auto p = pred.data[i];
    if (p >= kNumClasses) throw Error(Errc::out_of_range, "prediction " + std::to_string(p) + " at index " + std::to_string(i));
    ++cm.counts[g][p];
  }
  return cm;
}

double overall_accuracy(const ConfusionMatrix& cm) {
  const auto total = cm.total();
  if (total == 0) throw Error(Errc::undefined_metric, "overall accuracy of an empty confusion matrix");
  return static_cast<double>(cm.trace()) / static_cast<double>(total);
}

PrecisionRecall mean_avg_precision_recall(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw Error(Errc::undefined_metric, "precision/recall of an empty confusion matrix");
  PrecisionRecall pr;
  double psum = 0;
  double rsum = 0;
  int pn = 0;
  int rn = 0;
  for (int c = 0; c < kNumClasses; ++c) {
    const double tp = static_cast<double>(cm.counts[c][c]);
    if (const auto col = cm.column_sum(c); col > 0) {
      pr.precision[c] = tp / static_cast<double>(col);
      psum += *pr.precision[c];
      ++pn;
    } else {
      ++pr.excluded_precision;
    }
    if (const auto row = cm.row_sum(c); row > 0) {
      pr.recall[c] = tp / static_cast<double>(row);
      rsum += *pr.recall[c];
      ++rn;
    } else {
      ++pr.excluded_recall;
    }
  }
  // total > 0 guarantees at least one defined class on each side.
  pr.mean_precision = psum / pn;
  pr.mean_recall = rsum / rn;
  return pr;
}

MetricsReport make_report(const std::string& name, const ConfusionMatrix& cm) {
  const auto pr = mean_avg_precision_recall(cm);
  MetricsReport r;
  r.name = name;
  r.overall_accuracy = overall_accuracy(cm);
  r.mean_avg_precision = pr.mean_precision;
  r.mean_avg_recall = pr.mean_recall;
  r.precision = pr.precision;
  r.recall = pr.recall;
  r.excluded_precision = pr.excluded_precision;
  r.excluded_recall = pr.excluded_recall;
  return r;
}

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string opt_num(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
    } else if (c == ',' && !quoted) {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

std::string to_csv(const std::vector<MetricsReport>& reports) {
  std::ostringstream os;
  os << "name,overall_accuracy,mean_avg_precision,mean_avg_recall,excluded_precision,excluded_recall";
  for (auto n : kClassNames) os << ",precision_" << n;
  for (auto n : kClassNames) os << ",recall_" << n;
  os << "\n";
  for (const auto& r : reports) {
    os << '"' << r.name << '"' << ',' << num(r.overall_accuracy) << ',' << num(r.mean_avg_precision) << ','
       << num(r.mean_avg_recall) << ',' << r.excluded_precision << ',' << r.excluded_recall;
    for (const auto& p : r.precision) os << ',' << opt_num(p);
    for (const auto& p : r.recall) os << ',' << opt_num(p);
    os << "\n";
  }
  return os.str();
}

std::vector<MetricsReport> from_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  std::vector<MetricsReport> out;
  if (!std::getline(is, line) || line.rfind("name,", 0) != 0) throw Error(Errc::format, "metrics CSV: missing header");
  constexpr std::size_t kFields = 6 + 2 * kNumClasses;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != kFields) throw Error(Errc::format, "metrics CSV: expected " + std::to_string(kFields) + " fields");
    try {
      MetricsReport r;
      r.name = f[0];
      r.overall_accuracy = std::stod(f[1]);
      r.mean_avg_precision = std::stod(f[2]);
      r.mean_avg_recall = std::stod(f[3]);
      r.excluded_precision = std::stoi(f[4]);
      r.excluded_recall = std::stoi(f[5]);
      for (int c = 0; c < kNumClasses; ++c) {
        if (!f[6 + c].empty()) r.precision[c] = std::stod(f[6 + c]);
        if (!f[6 + kNumClasses + c].empty()) r.recall[c] = std::stod(f[6 + kNumClasses + c]);
      }
      out.push_back(r);
    } catch (const std::logic_error&) {
      throw Error(Errc::format, "metrics CSV: bad number in '" + line + "'");
    }
  }
  return out;
}

std::vector<std::array<bool, 3>> best_marks(const std::vector<MetricsReport>& reports) {
  std::vector<std::array<bool, 3>> marks(reports.size(), {false, false, false});
  auto column = [](const MetricsReport& r, int c) {
    return c == 0 ? r.overall_accuracy : c == 1 ? r.mean_avg_precision : r.mean_avg_recall;
  };
  for (int c = 0; c < 3; ++c) {
    double best = -1;
    for (const auto& r : reports) best = std::max(best, column(r, c));
    for (std::size_t i = 0; i < reports.size(); ++i) marks[i][c] = column(reports[i], c) == best;
  }
  return marks;
}

std::string format_table(const std::vector<MetricsReport>& reports) {
  if (reports.empty()) throw Error(Errc::config, "no metrics to report");
  const auto marks = best_marks(reports);
  std::size_t name_w = std::string("Input format").size();
  for (const auto& r : reports) name_w = std::max(name_w, r.name.size());
  const char* heads[3] = {"Overall Accuracy", "Mean Average Precision", "Mean Average Recall"};

  std::ostringstream os;
  auto pad = [](const std::string& s, std::size_t w) { return s + std::string(w > s.size() ? w - s.size() : 0, ' '); };
  os << pad("Input format", name_w);
  for (auto h : heads) os << "  " << h;
  os << "\n";
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i];
    os << pad(r.name, name_w);
    const double vals[3] = {r.overall_accuracy, r.mean_avg_precision, r.mean_avg_recall};
    for (int c = 0; c < 3; ++c) {
      char cell[32];
      std::snprintf(cell, sizeof cell, "%.4f%s", vals[c], marks[i][c] ? "*" : "");
      os << "  " << pad(cell, std::string(heads[c]).size());
    }
    os << "\n";
  }
  os << "(* best in column)\n";
  return os.str();
}

}  // namespace offroad::metrics
