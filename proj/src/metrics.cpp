#include "bevforge/metrics.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>

#include "bevforge/error.hpp"

namespace bevforge {

void accumulate_confusion(const Tensor<std::uint8_t>& pred, const Tensor<std::uint8_t>& ref,
                          ConfusionMatrix& confusion) {
  if (!pred.same_shape(ref)) {
    throw_error(ErrorCode::LatticeMismatch, "prediction " + shape_to_string(pred.shape()) +
                                                " vs reference " + shape_to_string(ref.shape()));
  }
  for (std::size_t i = 0; i < pred.size(); ++i) {
    std::uint8_t r = ref[i], p = pred[i];
    if (r == classes::kVoid || p == classes::kVoid) continue;
    if (r >= confusion.classes || p >= confusion.classes) {
      throw_error(ErrorCode::InvalidValue,
                  "class id " + std::to_string(std::max(r, p)) + " outside the " +
                      std::to_string(confusion.classes) + "-class matrix");
    }
    ++confusion.at(r, p);
  }
}

IouReport compute_iou(const ConfusionMatrix& confusion) {
  std::size_t k = confusion.classes;
  IouReport report;
  report.per_class.assign(k, 0.0);
  report.valid.assign(k, false);
  double sum = 0.0;
  std::size_t counted = 0;
  for (std::size_t c = 0; c < k; ++c) {
    std::uint64_t tp = confusion.at(c, c);
    std::uint64_t ref_total = 0, pred_total = 0;
    for (std::size_t j = 0; j < k; ++j) {
      ref_total += confusion.at(c, j);
      pred_total += confusion.at(j, c);
    }
    std::uint64_t uni = ref_total + pred_total - tp;
    if (uni == 0) continue;  // class absent on both sides: no opinion
    report.valid[c] = true;
    report.per_class[c] = static_cast<double>(tp) / static_cast<double>(uni);
    sum += report.per_class[c];
    ++counted;
  }
  report.miou = counted ? sum / static_cast<double>(counted) : 0.0;
  return report;
}

std::string format_iou_report(const IouReport& report) {
  std::size_t k = report.per_class.size();
  std::ostringstream table;
  std::ostringstream values;
  std::ostringstream csv;
  values << std::fixed << std::setprecision(2);
  csv << std::fixed << std::setprecision(2);
  for (std::size_t c = 0; c < k; ++c) {
    const char* name = classes::class_name(static_cast<std::uint8_t>(c));
    std::ostringstream cell;
    if (report.valid[c]) {
      cell << std::fixed << std::setprecision(2) << 100.0 * report.per_class[c];
    } else {
      cell << "n/a";
    }
    std::size_t width = std::max(std::string(name).size(), cell.str().size());
    table << std::setw(static_cast<int>(width)) << name << "  ";
    values << std::setw(static_cast<int>(width)) << cell.str() << "  ";
    csv << (report.valid[c] ? cell.str() : std::string("n/a")) << ",";
  }
  std::ostringstream miou;
  miou << std::fixed << std::setprecision(2) << 100.0 * report.miou;
  table << std::setw(static_cast<int>(std::max(std::string("miou").size(), miou.str().size())))
        << "miou";
  values << miou.str();
  csv << miou.str();
  return table.str() + "\n" + values.str() + "\n" + csv.str() + "\n";
}

}  // namespace bevforge
