#include "freshcl/expert.hpp"
#include "freshcl/errors.hpp"

#include <cmath>

namespace freshcl {

Expert::Expert(int id_, std::size_t d_in, std::size_t d_out, Rng& rng) : id(id_) {
    if (d_out < 2 || d_in == 0) {
        throw ParameterError("expert requires d_in >= 1 and d_out >= 2");
    }
    projection = gaussian_matrix(rng, d_out, d_in, 0.0, 1.0 / std::sqrt(static_cast<double>(d_in)));
    frame = generate_etf(d_out, d_out, rng);
    opt_state = AdamWState(d_out, d_in);
}

std::vector<double> Expert::project(const std::vector<double>& feature) const {
    return l2_normalize(matvec(projection, feature));
}

} // namespace freshcl
