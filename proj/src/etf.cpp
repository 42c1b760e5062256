#include "freshcl/etf.hpp"
#include "freshcl/errors.hpp"

#include <cmath>

namespace freshcl {

EtfFrame generate_etf(std::size_t d, std::size_t k, Rng& rng) {
    if (k < 2 || k > d) {
        throw ParameterError("generate_etf requires 2 <= k <= d");
    }
    const Matrix u = thin_qr_q(gaussian_matrix(rng, d, k));

    // Centering matrix I - 11^T/K, scaled to restore unit columns.
    const double kk = static_cast<double>(k);
    const double scale = std::sqrt(kk / (kk - 1.0));
    Matrix w(d, k);
    for (std::size_t i = 0; i < d; ++i) {
        double row_mean = 0.0;
        for (std::size_t j = 0; j < k; ++j) row_mean += u.at(i, j);
        row_mean /= kk;
        for (std::size_t j = 0; j < k; ++j) {
            w.at(i, j) = scale * (u.at(i, j) - row_mean);
        }
    }
    return EtfFrame{d, k, std::move(w)};
}

EtfReport validate_etf(const EtfFrame& frame, double tol) {
    const std::size_t k = frame.num_targets;
    const double kk = static_cast<double>(k);
    const Matrix gram = matmul(transpose(frame.targets), frame.targets);

    EtfReport report;
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            const double target = (i == j) ? 1.0 : -1.0 / (kk - 1.0);
            const double dev = std::fabs(gram.at(i, j) - target);
            if (dev > report.max_gram_deviation) report.max_gram_deviation = dev;
        }
        const double norm_dev = std::fabs(std::sqrt(gram.at(i, i)) - 1.0);
        if (norm_dev > report.max_norm_deviation) report.max_norm_deviation = norm_dev;
    }

    std::vector<double> col_sum(frame.dim, 0.0);
    for (std::size_t i = 0; i < frame.dim; ++i)
        for (std::size_t j = 0; j < k; ++j) col_sum[i] += frame.targets.at(i, j);
    report.column_sum_norm = norm(col_sum);
    report.within_tolerance = report.max_gram_deviation < tol &&
                              report.max_norm_deviation < tol && report.column_sum_norm < tol;
    return report;
}

double dr_loss(const std::vector<double>& feature_hat, const EtfFrame& frame,
               std::size_t label_index) {
    if (label_index >= frame.num_targets) {
        throw IndexError("dr_loss label index out of range");
    }
    if (feature_hat.size() != frame.dim) {
        throw DimensionError("dr_loss feature dimension mismatch");
    }
    if (std::fabs(norm(feature_hat) - 1.0) > 1e-9) {
        throw ParameterError("dr_loss expects a unit-norm feature");
    }
    const std::vector<double> w = column(frame.targets, label_index);
    const double s = dot(w, feature_hat);
    return 0.5 * (s - 1.0) * (s - 1.0);
}

std::vector<double> dr_loss_grad(const std::vector<double>& feature, const EtfFrame& frame,
                                 std::size_t label_index) {
    if (label_index >= frame.num_targets) {
        throw IndexError("dr_loss_grad label index out of range");
    }
    if (feature.size() != frame.dim) {
        throw DimensionError("dr_loss_grad feature dimension mismatch");
    }
    const double n = norm(feature);
    if (n == 0.0) {
        throw DegenerateInputError("dr_loss_grad on a zero-norm feature");
    }
    const std::vector<double> w = column(frame.targets, label_index);
    std::vector<double> mu_hat(feature.size());
    for (std::size_t i = 0; i < feature.size(); ++i) mu_hat[i] = feature[i] / n;
    const double s = dot(w, mu_hat);

    std::vector<double> grad(feature.size());
    const double coeff = (s - 1.0) / n;
    for (std::size_t i = 0; i < feature.size(); ++i) {
        grad[i] = coeff * (w[i] - s * mu_hat[i]);
    }
    return grad;
}

} // namespace freshcl
