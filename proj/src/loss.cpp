#include "ecglab/loss.hpp"

#include "ecglab/errors.hpp"

#include <cmath>
#include <string>

namespace ecglab {

namespace {

void check_shapes(const Matrix& logits, const LabelMatrix& y, const LossConfig& cfg) {
    if (logits.rows != y.rows || logits.cols != y.cols)
        throw ShapeError("logits are " + std::to_string(logits.rows) + "x" +
                         std::to_string(logits.cols) + " but labels are " +
                         std::to_string(y.rows) + "x" + std::to_string(y.cols));
    if (!(cfg.epsilon > 0.0))
        throw ConfigError("loss epsilon must be positive");
}

double mask_sum_of(const LabelMatrix& y) {
    double s = 0.0;
    for (std::int8_t e : y.v) {
        if (e == -1) continue;
        if (e != 0 && e != 1)
            throw DataError("label entry " + std::to_string(int(e)) +
                            " outside {-1, 0, 1}");
        s += 1.0;
    }
    return s;
}

} // namespace

MaskedLabels build_mask(const LabelMatrix& y) {
    MaskedLabels out;
    out.mask = Matrix(y.rows, y.cols);
    out.relabeled = Matrix(y.rows, y.cols);
    for (std::size_t i = 0; i < y.v.size(); ++i) {
        const std::int8_t e = y.v[i];
        switch (e) {
        case -1: break; // mask 0, relabel 0
        case 0: out.mask.v[i] = 1.0; break;
        case 1:
            out.mask.v[i] = 1.0;
            out.relabeled.v[i] = 1.0;
            break;
        default:
            throw DataError("label entry " + std::to_string(int(e)) +
                            " outside {-1, 0, 1}");
        }
        out.mask_sum += out.mask.v[i];
    }
    return out;
}

double sigmoid(double logit) {
    if (logit >= 0.0) return 1.0 / (1.0 + std::exp(-logit));
    const double e = std::exp(logit);
    return e / (1.0 + e);
}

double bce_logit(double logit, double y) {
    return std::max(logit, 0.0) - logit * y + std::log1p(std::exp(-std::abs(logit)));
}

double masked_bce(const Matrix& logits, const LabelMatrix& y, const LossConfig& cfg) {
    check_shapes(logits, y, cfg);
    double sum = 0.0;
    double mask_sum = 0.0;
    for (std::size_t i = 0; i < y.v.size(); ++i) {
        const std::int8_t e = y.v[i];
        if (e == -1) continue; // untested: no contribution at all
        if (e != 0 && e != 1)
            throw DataError("label entry " + std::to_string(int(e)) +
                            " outside {-1, 0, 1}");
        sum += bce_logit(logits.v[i], static_cast<double>(e));
        mask_sum += 1.0;
    }
    return sum / (mask_sum + cfg.epsilon);
}

Matrix masked_bce_grad(const Matrix& logits, const LabelMatrix& y,
                       const LossConfig& cfg) {
    check_shapes(logits, y, cfg);
    const double denom = mask_sum_of(y) + cfg.epsilon;
    Matrix grad(logits.rows, logits.cols); // masked entries stay exactly 0
    for (std::size_t i = 0; i < y.v.size(); ++i) {
        const std::int8_t e = y.v[i];
        if (e == -1) continue;
        grad.v[i] = (sigmoid(logits.v[i]) - static_cast<double>(e)) / denom;
    }
    return grad;
}

} // namespace ecglab
