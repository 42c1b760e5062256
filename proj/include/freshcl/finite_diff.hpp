#pragma once

#include "freshcl/matrix.hpp"

#include <functional>

namespace freshcl {

// Central-difference gradient oracle: (f(x + h e_ij) - f(x - h e_ij)) / 2h
// per entry. Used to cross-check every analytic gradient in the project.
inline Matrix finite_diff_grad(const std::function<double(const Matrix&)>& f, const Matrix& at,
                               double h) {
    Matrix grad(at.rows(), at.cols());
    Matrix probe = at;
    for (std::size_t i = 0; i < at.rows(); ++i) {
        for (std::size_t j = 0; j < at.cols(); ++j) {
            const double orig = probe.at(i, j);
            probe.at(i, j) = orig + h;
            const double fp = f(probe);
            probe.at(i, j) = orig - h;
            const double fm = f(probe);
            probe.at(i, j) = orig;
            grad.at(i, j) = (fp - fm) / (2.0 * h);
        }
    }
    return grad;
}

} // namespace freshcl
