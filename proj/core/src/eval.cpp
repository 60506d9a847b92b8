#include "normint/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "normint/error.hpp"

namespace normint {

double median(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::InvalidArgument, "median of an empty set");
  std::vector<double> v(values.begin(), values.end());
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + mid);
  return 0.5 * (lower + upper);
}

EvalReport evaluate(const DepthMap& pred, const DepthMap& gt, std::span<const std::uint8_t> mask) {
  if (pred.width() != gt.width() || pred.height() != gt.height()) {
    throw Error(ErrorCode::InvalidArgument, "prediction and ground truth differ in size");
  }
  if (!mask.empty() && mask.size() != gt.size()) {
    throw Error(ErrorCode::InvalidArgument, "evaluation mask does not match the depth size");
  }
  auto p = pred.values();
  auto g = gt.values();
  std::vector<std::size_t> idx;
  std::vector<double> ratios;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (!pred.mask()[i] || !gt.mask()[i]) continue;
    if (!mask.empty() && !mask[i]) continue;
    if (!(p[i] > 0.0) || !(g[i] > 0.0) || !std::isfinite(p[i]) || !std::isfinite(g[i])) continue;
    idx.push_back(i);
    ratios.push_back(g[i] / p[i]);
  }
  if (idx.empty()) throw Error(ErrorCode::NoOverlap, "no pixel is valid in both depth maps");

  EvalReport report;
  report.valid_pixel_count = idx.size();
  report.aligned_scale = median(ratios);
  double abs_sum = 0.0;
  double rel_sum = 0.0;
  for (std::size_t i : idx) {
    const double err = std::abs(report.aligned_scale * p[i] - g[i]);
    abs_sum += err;
    rel_sum += err / g[i];
  }
  report.made = abs_sum / static_cast<double>(idx.size());
  report.relative_error = rel_sum / static_cast<double>(idx.size());
  return report;
}

double l1_optimal_scale(std::span<const double> pred, std::span<const double> gt) {
  if (pred.size() != gt.size() || pred.empty()) {
    throw Error(ErrorCode::InvalidArgument, "l1 scale needs matching non-empty inputs");
  }
  std::vector<std::size_t> order(pred.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> ratio(pred.size());
  double total = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    ratio[i] = gt[i] / pred[i];
    total += pred[i];
  }
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return ratio[a] < ratio[b]; });
  // sum_i pred_i |s - ratio_i| is minimized where the cumulative weight
  // first reaches half of the total.
  double acc = 0.0;
  for (std::size_t i : order) {
    acc += pred[i];
    if (acc >= 0.5 * total) return ratio[i];
  }
  return ratio[order.back()];
}

double min_theoretical_made(std::span<const double> filled, std::span<const double> gt,
                            const Partition& partition) {
  if (filled.size() != partition.vertex_count() || gt.size() != partition.vertex_count()) {
    throw Error(ErrorCode::InvalidArgument, "per-vertex depths do not match the partition");
  }
  if (filled.empty()) return 0.0;
  double total = 0.0;
  std::vector<double> p;
  std::vector<double> g;
  for (ComponentId c = 0; c < partition.component_count(); ++c) {
    p.clear();
    g.clear();
    for (VertexId v : partition.component(c)) {
      p.push_back(filled[v]);
      g.push_back(gt[v]);
    }
    const double s = l1_optimal_scale(p, g);
    for (std::size_t i = 0; i < p.size(); ++i) total += std::abs(s * p[i] - g[i]);
  }
  return total / static_cast<double>(filled.size());
}

}  // namespace normint
