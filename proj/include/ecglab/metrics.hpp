#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace ecglab {

// Per-indicator, per-window evaluation summary. `evaluable` is false when
// the window held only one label class — such indicators are reported with
// a "not evaluable" marker instead of a number.
struct IndicatorResult {
    int class_id = 0;
    std::int64_t window_s = 0; // window half-width in seconds
    std::size_t n_all = 0;     // events with an observed label
    std::size_t n_positive = 0;
    bool evaluable = false;
    double auc = 0.0;
    double ci_low = 0.0, ci_high = 0.0;
    double sensitivity = 0.0, specificity = 0.0, f1 = 0.0;
    double operating_threshold = 0.0;
};

// Discriminative-strength buckets: auc >= 0.65 strong, 0.55 <= auc < 0.65
// moderate, auc < 0.55 weak.
struct StratifiedReport {
    std::vector<IndicatorResult> strong;
    std::vector<IndicatorResult> moderate;
    std::vector<IndicatorResult> weak;
};

// Mean of the per-segment probability vectors, one value per class. The sum
// runs over each class's values in sorted order, so reordering segments
// cannot change the result even at the last bit.
std::vector<double> aggregate_event_scores(
    const std::vector<std::vector<double>>& segment_probs);

// Mann-Whitney AUC: (wins + 0.5*ties) / (positives * negatives) over all
// positive-negative pairs, computed via midranks with an integer numerator —
// identical to brute-force pair enumeration, just O(n log n).
double auc(const std::vector<double>& scores, const std::vector<int>& labels);

// Stratified percentile bootstrap CI: positives and negatives resampled
// separately, 2.5th/97.5th percentiles over n_boot resamples. `salt`
// separates the random stream per (indicator, window) so evaluation order
// cannot matter.
std::pair<double, double> auc_ci(const std::vector<double>& scores,
                                 const std::vector<int>& labels,
                                 std::size_t n_boot, std::uint64_t seed,
                                 std::uint64_t salt = 0);

struct ConfusionMetrics {
    double sensitivity = 0.0;
    double specificity = 0.0;
    double f1 = 0.0;
    double operating_threshold = 0.0;
};

// Operating point by Youden's J (sensitivity + specificity - 1) maximized
// over observed score cut-points; predict positive iff score >= threshold;
// J ties resolve to the lower threshold.
ConfusionMetrics confusion_metrics(const std::vector<double>& scores,
                                   const std::vector<int>& labels);

struct EvalConfig {
    std::size_t n_boot = 2000;
    std::uint64_t boot_seed = 0;
};

// Full per-indicator evaluation: counts, AUC, CI, and threshold metrics;
// single-class label sets come back with evaluable == false.
IndicatorResult evaluate_indicator(int class_id, std::int64_t window_s,
                                   const std::vector<double>& scores,
                                   const std::vector<int>& labels,
                                   const EvalConfig& cfg);

// Buckets the evaluable results by AUC.
StratifiedReport stratify(const std::vector<IndicatorResult>& results);

} // namespace ecglab
