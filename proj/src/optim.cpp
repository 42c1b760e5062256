#include "freshcl/optim.hpp"
#include "freshcl/errors.hpp"

#include <cmath>

namespace freshcl {

void adamw_step(Matrix& param, const Matrix& grad, AdamWState& state, const AdamWParams& hp) {
    if (param.rows() != grad.rows() || param.cols() != grad.cols()) {
        throw DimensionError("adamw_step param/grad shape mismatch");
    }
    if (state.first_moment.size() == 0) {
        state.first_moment = Matrix(param.rows(), param.cols());
        state.second_moment = Matrix(param.rows(), param.cols());
    }
    if (state.first_moment.rows() != param.rows() || state.first_moment.cols() != param.cols()) {
        throw DimensionError("adamw_step moment/param shape mismatch");
    }

    state.step += 1;
    const double bc1 = 1.0 - std::pow(hp.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(hp.beta2, static_cast<double>(state.step));
    const double decay = 1.0 - hp.lr * hp.weight_decay;

    double* p = param.data();
    const double* g = grad.data();
    double* m = state.first_moment.data();
    double* v = state.second_moment.data();
    for (std::size_t i = 0; i < param.size(); ++i) {
        p[i] *= decay;
        m[i] = hp.beta1 * m[i] + (1.0 - hp.beta1) * g[i];
        v[i] = hp.beta2 * v[i] + (1.0 - hp.beta2) * g[i] * g[i];
        const double m_hat = m[i] / bc1;
        const double v_hat = v[i] / bc2;
        p[i] -= hp.lr * m_hat / (std::sqrt(v_hat) + hp.eps);
    }
}

} // namespace freshcl
