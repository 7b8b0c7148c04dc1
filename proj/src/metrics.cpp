#include "fforge/metrics.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace fforge {

namespace {

void check_dims(const Mask& a, const Mask& b, const char* what) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw std::invalid_argument(std::string(what) + ": dimension mismatch");
  }
}

// Mean and population std in one pass of Welford updates.
std::pair<double, double> mean_std(const std::vector<EvalRow>& rows, double EvalRow::*field) {
  double mean = 0, m2 = 0;
  std::size_t n = 0;
  for (const auto& r : rows) {
    const double x = r.*field;
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }
  return {mean, std::sqrt(m2 / static_cast<double>(n))};
}

}  // namespace

double iou(const Mask& pred, const Mask& gt, float threshold) {
  check_dims(pred, gt, "iou");
  const auto p = pred.values() > threshold;
  const auto g = gt.values() > threshold;
  const auto inter = (p && g).count();
  const auto uni = (p || g).count();
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

double accuracy(const Mask& pred, const Mask& gt, float threshold) {
  check_dims(pred, gt, "accuracy");
  if (pred.values().size() == 0) throw std::invalid_argument("accuracy: empty masks");
  const auto same = ((pred.values() > threshold) == (gt.values() > threshold)).count();
  return static_cast<double>(same) / static_cast<double>(pred.values().size());
}

EvalReport aggregate(std::vector<EvalRow> rows) {
  if (rows.empty()) throw std::invalid_argument("aggregate: no rows");
  EvalReport report;
  std::tie(report.iou_mean, report.iou_std) = mean_std(rows, &EvalRow::iou);
  std::tie(report.acc_mean, report.acc_std) = mean_std(rows, &EvalRow::accuracy);
  report.rows = std::move(rows);
  return report;
}

std::string format_csv(const EvalReport& report) {
  std::ostringstream os;
  os.precision(10);
  os << "name,iou,accuracy\n";
  for (const auto& r : report.rows) os << r.name << ',' << r.iou << ',' << r.accuracy << '\n';
  os << "MEAN," << report.iou_mean << ',' << report.acc_mean << '\n';
  os << "STD," << report.iou_std << ',' << report.acc_std << '\n';
  return os.str();
}

}  // namespace fforge
