#pragma once

#include <span>
#include <string>
#include <vector>

#include "fforge/raster.hpp"

namespace fforge {

/// |pred ∩ gt| / |pred ∪ gt| after thresholding both (strictly above
/// `threshold`). Two empty masks score 1.
double iou(const Mask& pred, const Mask& gt, float threshold = 0.5f);

/// Fraction of pixels whose thresholded labels agree.
double accuracy(const Mask& pred, const Mask& gt, float threshold = 0.5f);

struct EvalRow {
  std::string name;
  double iou = 0;
  double accuracy = 0;
};

struct EvalReport {
  std::vector<EvalRow> rows;
  double iou_mean = 0;
  double iou_std = 0;  // population std
  double acc_mean = 0;
  double acc_std = 0;
};

EvalReport aggregate(std::vector<EvalRow> rows);

/// "name,iou,accuracy" rows followed by MEAN and STD rows.
std::string format_csv(const EvalReport& report);

}  // namespace fforge
