#include "ecglab/metrics.hpp"

#include "ecglab/errors.hpp"
#include "ecglab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace ecglab {

namespace {

struct ClassCounts {
    std::size_t n_pos = 0;
    std::size_t n_neg = 0;
};

ClassCounts check_scored_labels(const std::vector<double>& scores,
                                const std::vector<int>& labels) {
    if (scores.size() != labels.size())
        throw ShapeError("scores (" + std::to_string(scores.size()) +
                         ") and labels (" + std::to_string(labels.size()) +
                         ") differ in length");
    if (scores.empty()) throw UndefinedMetricError("no scored samples");
    ClassCounts c;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (!std::isfinite(scores[i]))
            throw DataError("non-finite score at index " + std::to_string(i));
        if (labels[i] == 1) ++c.n_pos;
        else if (labels[i] == 0) ++c.n_neg;
        else
            throw DataError("label " + std::to_string(labels[i]) +
                            " outside {0, 1} at index " + std::to_string(i));
    }
    if (c.n_pos == 0)
        throw UndefinedMetricError("no positive labels, AUC undefined");
    if (c.n_neg == 0)
        throw UndefinedMetricError("no negative labels, AUC undefined");
    return c;
}

// Twice the positive midrank sum: over tie groups covering (1-based) ranks
// [a, b], each member's midrank is (a+b)/2, so twice the sum stays integral.
unsigned long long twice_positive_rank_sum(const std::vector<double>& scores,
                                           const std::vector<int>& labels) {
    const std::size_t n = scores.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return scores[a] < scores[b];
    });

    unsigned long long two_r1 = 0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        unsigned long long pos_in_group = 0;
        while (j < n && scores[idx[j]] == scores[idx[i]]) {
            if (labels[idx[j]] == 1) ++pos_in_group;
            ++j;
        }
        two_r1 += pos_in_group * static_cast<unsigned long long>(i + 1 + j);
        i = j;
    }
    return two_r1;
}

} // namespace

std::vector<double> aggregate_event_scores(
    const std::vector<std::vector<double>>& segment_probs) {
    if (segment_probs.empty())
        throw DataError("cannot aggregate an event with no segments");
    const std::size_t c = segment_probs.front().size();
    for (const auto& row : segment_probs)
        if (row.size() != c)
            throw ShapeError("segment probability vectors differ in length");

    std::vector<double> mean(c, 0.0);
    std::vector<double> column(segment_probs.size());
    for (std::size_t j = 0; j < c; ++j) {
        for (std::size_t s = 0; s < segment_probs.size(); ++s)
            column[s] = segment_probs[s][j];
        std::sort(column.begin(), column.end());
        double sum = 0.0;
        for (double v : column) sum += v;
        mean[j] = sum / static_cast<double>(column.size());
    }
    return mean;
}

double auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    const auto c = check_scored_labels(scores, labels);
    const unsigned long long n1 = c.n_pos, n0 = c.n_neg;
    const unsigned long long two_r1 = twice_positive_rank_sum(scores, labels);
    // 2*U1 = 2*R1 - n1*(n1+1) counts each win twice and each tie once.
    const unsigned long long two_u1 = two_r1 - n1 * (n1 + 1);
    return static_cast<double>(two_u1) / static_cast<double>(2 * n1 * n0);
}

std::pair<double, double> auc_ci(const std::vector<double>& scores,
                                 const std::vector<int>& labels,
                                 std::size_t n_boot, std::uint64_t seed,
                                 std::uint64_t salt) {
    if (n_boot < 100)
        throw ConfigError("bootstrap needs at least 100 resamples, got " +
                          std::to_string(n_boot));
    const auto counts = check_scored_labels(scores, labels);

    std::vector<double> pos, neg;
    pos.reserve(counts.n_pos);
    neg.reserve(counts.n_neg);
    for (std::size_t i = 0; i < labels.size(); ++i)
        (labels[i] == 1 ? pos : neg).push_back(scores[i]);

    Rng rng(derive_seed(seed, "bootstrap", salt));
    std::vector<double> rs;
    std::vector<int> rl;
    rs.resize(pos.size() + neg.size());
    rl.resize(pos.size() + neg.size());
    for (std::size_t i = 0; i < pos.size(); ++i) rl[i] = 1;
    for (std::size_t i = pos.size(); i < rl.size(); ++i) rl[i] = 0;

    std::vector<double> aucs(n_boot);
    for (std::size_t b = 0; b < n_boot; ++b) {
        for (std::size_t i = 0; i < pos.size(); ++i)
            rs[i] = pos[rng.below(pos.size())];
        for (std::size_t i = 0; i < neg.size(); ++i)
            rs[pos.size() + i] = neg[rng.below(neg.size())];
        aucs[b] = auc(rs, rl);
    }
    std::sort(aucs.begin(), aucs.end());

    // Linear interpolation between order statistics.
    auto percentile = [&aucs](double q) {
        const double pos_idx = q * static_cast<double>(aucs.size() - 1);
        const std::size_t lo = static_cast<std::size_t>(pos_idx);
        const double frac = pos_idx - static_cast<double>(lo);
        if (lo + 1 >= aucs.size()) return aucs.back();
        return aucs[lo] * (1.0 - frac) + aucs[lo + 1] * frac;
    };
    return {percentile(0.025), percentile(0.975)};
}

ConfusionMetrics confusion_metrics(const std::vector<double>& scores,
                                   const std::vector<int>& labels) {
    const auto counts = check_scored_labels(scores, labels);
    const double p = static_cast<double>(counts.n_pos);
    const double n = static_cast<double>(counts.n_neg);

    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return scores[a] > scores[b];
    });

    // Sweep thresholds from the highest observed score downward; predicted
    // positive means score >= threshold. The >= acceptance of equal J picks
    // the lowest threshold among ties.
    double best_j = -2.0;
    std::size_t best_tp = 0, best_fp = 0;
    double best_threshold = 0.0;
    std::size_t tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < idx.size()) {
        const double t = scores[idx[i]];
        std::size_t j = i;
        while (j < idx.size() && scores[idx[j]] == t) {
            if (labels[idx[j]] == 1) ++tp;
            else ++fp;
            ++j;
        }
        const double sens = static_cast<double>(tp) / p;
        const double spec = (n - static_cast<double>(fp)) / n;
        const double youden = sens + spec - 1.0;
        if (youden >= best_j) {
            best_j = youden;
            best_tp = tp;
            best_fp = fp;
            best_threshold = t;
        }
        i = j;
    }

    ConfusionMetrics m;
    m.operating_threshold = best_threshold;
    m.sensitivity = static_cast<double>(best_tp) / p;
    m.specificity = (n - static_cast<double>(best_fp)) / n;
    const double fn = p - static_cast<double>(best_tp);
    m.f1 = 2.0 * static_cast<double>(best_tp) /
           (2.0 * static_cast<double>(best_tp) + static_cast<double>(best_fp) + fn);
    return m;
}

IndicatorResult evaluate_indicator(int class_id, std::int64_t window_s,
                                   const std::vector<double>& scores,
                                   const std::vector<int>& labels,
                                   const EvalConfig& cfg) {
    IndicatorResult r;
    r.class_id = class_id;
    r.window_s = window_s;
    r.n_all = labels.size();
    for (int l : labels)
        if (l == 1) ++r.n_positive;

    try {
        r.auc = auc(scores, labels);
    } catch (const UndefinedMetricError&) {
        r.evaluable = false;
        return r;
    }
    r.evaluable = true;
    const std::uint64_t salt = (static_cast<std::uint64_t>(class_id) << 32) ^
                               static_cast<std::uint64_t>(window_s);
    std::tie(r.ci_low, r.ci_high) =
        auc_ci(scores, labels, cfg.n_boot, cfg.boot_seed, salt);
    const auto cm = confusion_metrics(scores, labels);
    r.sensitivity = cm.sensitivity;
    r.specificity = cm.specificity;
    r.f1 = cm.f1;
    r.operating_threshold = cm.operating_threshold;
    return r;
}

StratifiedReport stratify(const std::vector<IndicatorResult>& results) {
    StratifiedReport report;
    for (const auto& r : results) {
        if (!r.evaluable) continue;
        if (r.auc >= 0.65) report.strong.push_back(r);
        else if (r.auc >= 0.55) report.moderate.push_back(r);
        else report.weak.push_back(r);
    }
    return report;
}

} // namespace ecglab
