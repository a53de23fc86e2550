#pragma once

#include "ecglab/matrix.hpp"

namespace ecglab {

// Masked binary cross-entropy over sparse {-1, 0, 1} labels: untested
// entries carry mask 0 and contribute nothing to loss or gradient; the sum
// of per-entry losses is divided by (number of valid labels + epsilon).
struct LossConfig {
    double epsilon = 1e-8; // guards the all-masked batch against 0/0
};

// Mask M (1 iff label != -1) and relabeling Y' (label where observed, 0
// where masked) for one label matrix.
struct MaskedLabels {
    Matrix mask;
    Matrix relabeled;
    double mask_sum = 0.0;
};

MaskedLabels build_mask(const LabelMatrix& y);

double sigmoid(double logit);

// Single-term BCE in the numerically stable logit form
// max(l, 0) - l*y + log(1 + exp(-|l|)); finite for any finite logit.
double bce_logit(double logit, double y);

// Sum of bce_logit over unmasked entries, divided by (mask_sum + epsilon).
// An all-masked batch yields exactly 0.
double masked_bce(const Matrix& logits, const LabelMatrix& y, const LossConfig& cfg);

// d loss / d logit: mask * (sigmoid(logit) - Y') / (mask_sum + epsilon).
// Masked positions are exactly zero — never a rounded small number.
Matrix masked_bce_grad(const Matrix& logits, const LabelMatrix& y,
                       const LossConfig& cfg);

} // namespace ecglab
