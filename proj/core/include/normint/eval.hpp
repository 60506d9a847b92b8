#pragma once

#include <cstddef>
#include <span>

#include "normint/geometry.hpp"
#include "normint/graph.hpp"

namespace normint {

struct EvalReport {
  double made = 0.0;            // mean |s z_pred - z_gt|
  double relative_error = 0.0;  // mean |s z_pred - z_gt| / z_gt
  double aligned_scale = 1.0;   // s = median(z_gt / z_pred)
  std::size_t valid_pixel_count = 0;
};

/// Scale-aligned depth errors over pixels valid in pred, gt and `mask`
/// (empty mask: no extra restriction). Throws Error(NoOverlap).
EvalReport evaluate(const DepthMap& pred, const DepthMap& gt,
                    std::span<const std::uint8_t> mask = {});

/// Median of the values (mean of the two middle ones for even counts).
double median(std::span<const double> values);

/// Scale s minimizing sum_i |s pred_i - gt_i| (pred_i > 0): the weighted
/// median of gt_i / pred_i with weights pred_i.
double l1_optimal_scale(std::span<const double> pred, std::span<const double> gt);

/// Pixel-weighted mean of each component's minimum mean absolute depth error
/// under its own optimal scale. `filled` and `gt` are per-vertex depths.
double min_theoretical_made(std::span<const double> filled, std::span<const double> gt,
                            const Partition& partition);

}  // namespace normint
