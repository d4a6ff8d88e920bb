#pragma once

#include <array>
#include <vector>

#include "tempotrack/box.hpp"
#include "tempotrack/error.hpp"

namespace tempotrack {

// One-pass evaluation curves. Precision counts frames with center location
// error <= threshold over the pixel grid 0..50; success counts frames with
// IoU >= threshold over 0..1 in steps of 0.05.
struct EvalCurves {
    std::array<double, 51> precision{};
    std::array<double, 21> success{};
    double auc = 0.0;         // mean of the success curve
    double prec_at_20 = 0.0;  // precision at the 20-pixel threshold
};

inline EvalCurves evaluate(const std::vector<BBox>& pred, const std::vector<BBox>& gt) {
    if (pred.size() != gt.size()) {
        throw InputError("evaluate: prediction/ground-truth count mismatch");
    }
    if (pred.empty()) throw InputError("evaluate: empty input");

    EvalCurves curves;
    const double n = static_cast<double>(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double cle = center_error(pred[i], gt[i]);
        const double ov = iou(pred[i], gt[i]);
        for (int t = 0; t <= 50; ++t) {
            if (cle <= static_cast<double>(t)) curves.precision[static_cast<std::size_t>(t)] += 1.0;
        }
        for (int t = 0; t <= 20; ++t) {
            if (ov >= 0.05 * t) curves.success[static_cast<std::size_t>(t)] += 1.0;
        }
    }
    for (double& v : curves.precision) v /= n;
    for (double& v : curves.success) v /= n;
    for (double v : curves.success) curves.auc += v;
    curves.auc /= static_cast<double>(curves.success.size());
    curves.prec_at_20 = curves.precision[20];
    return curves;
}

}  // namespace tempotrack
