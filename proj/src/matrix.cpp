#include "freshcl/matrix.hpp"
#include "freshcl/errors.hpp"

#include <cmath>
#include <cstring>

namespace freshcl {

Matrix::Matrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        throw DimensionError("matrix data length does not match rows*cols");
    }
    for (double v : data_) {
        if (!std::isfinite(v)) {
            throw ParameterError("matrix entries must be finite");
        }
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1.0;
    return m;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw DimensionError("matmul shape mismatch");
    }
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a.at(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < b.cols(); ++j) {
                c.at(i, j) += aik * b.at(k, j);
            }
        }
    }
    return c;
}

Matrix transpose(const Matrix& m) {
    Matrix t(m.cols(), m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j)
            t.at(j, i) = m.at(i, j);
    return t;
}

Matrix thin_qr_q(const Matrix& a) {
    const std::size_t d = a.rows();
    const std::size_t k = a.cols();
    if (k > d) {
        throw DimensionError("thin_qr_q requires rows >= cols");
    }
    Matrix r = a;
    std::vector<std::vector<double>> reflectors(k);
    std::vector<double> r_diag(k, 0.0);

    for (std::size_t j = 0; j < k; ++j) {
        // Householder vector for column j below the diagonal.
        double nrm = 0.0;
        for (std::size_t i = j; i < d; ++i) nrm += r.at(i, j) * r.at(i, j);
        nrm = std::sqrt(nrm);
        const double x0 = r.at(j, j);
        const double alpha = (x0 >= 0.0) ? -nrm : nrm;

        std::vector<double> v(d - j, 0.0);
        for (std::size_t i = j; i < d; ++i) v[i - j] = r.at(i, j);
        v[0] -= alpha;
        double vnorm = 0.0;
        for (double x : v) vnorm += x * x;
        vnorm = std::sqrt(vnorm);
        if (vnorm > 0.0) {
            for (double& x : v) x /= vnorm;
            for (std::size_t c = j; c < k; ++c) {
                double proj = 0.0;
                for (std::size_t i = j; i < d; ++i) proj += v[i - j] * r.at(i, c);
                for (std::size_t i = j; i < d; ++i) r.at(i, c) -= 2.0 * proj * v[i - j];
            }
        }
        reflectors[j] = std::move(v);
        r_diag[j] = r.at(j, j);
    }

    // Accumulate Q's first k columns by applying the reflectors in reverse.
    Matrix q(d, k);
    for (std::size_t j = 0; j < k; ++j) q.at(j, j) = 1.0;
    for (std::size_t j = k; j-- > 0;) {
        const std::vector<double>& v = reflectors[j];
        if (v.empty()) continue;
        for (std::size_t c = 0; c < k; ++c) {
            double proj = 0.0;
            for (std::size_t i = j; i < d; ++i) proj += v[i - j] * q.at(i, c);
            for (std::size_t i = j; i < d; ++i) q.at(i, c) -= 2.0 * proj * v[i - j];
        }
    }
    for (std::size_t j = 0; j < k; ++j) {
        if (r_diag[j] < 0.0) {
            for (std::size_t i = 0; i < d; ++i) q.at(i, j) = -q.at(i, j);
        }
    }
    return q;
}

std::vector<double> matvec(const Matrix& m, const std::vector<double>& v) {
    if (m.cols() != v.size()) {
        throw DimensionError("matvec shape mismatch");
    }
    std::vector<double> out(m.rows(), 0.0);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < m.cols(); ++j) acc += m.at(i, j) * v[j];
        out[i] = acc;
    }
    return out;
}

Matrix outer(const std::vector<double>& u, const std::vector<double>& v) {
    Matrix m(u.size(), v.size());
    for (std::size_t i = 0; i < u.size(); ++i)
        for (std::size_t j = 0; j < v.size(); ++j)
            m.at(i, j) = u[i] * v[j];
    return m;
}

std::vector<double> column(const Matrix& m, std::size_t j) {
    if (j >= m.cols()) {
        throw IndexError("column index out of range");
    }
    std::vector<double> out(m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i) out[i] = m.at(i, j);
    return out;
}

void set_column(Matrix& m, std::size_t j, const std::vector<double>& v) {
    if (j >= m.cols() || v.size() != m.rows()) {
        throw DimensionError("set_column shape mismatch");
    }
    for (std::size_t i = 0; i < m.rows(); ++i) m.at(i, j) = v[i];
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) {
        throw DimensionError("dot length mismatch");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

double norm(const std::vector<double>& v) {
    return std::sqrt(dot(v, v));
}

std::vector<double> l2_normalize(const std::vector<double>& v) {
    const double n = norm(v);
    if (n == 0.0) {
        throw DegenerateInputError("cannot normalize a zero-norm vector");
    }
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] / n;
    return out;
}

std::vector<double> softmax(const std::vector<double>& logits) {
    if (logits.empty()) {
        throw ParameterError("softmax over empty input");
    }
    double mx = logits[0];
    for (double x : logits) {
        if (!std::isfinite(x)) throw ParameterError("softmax requires finite logits");
        if (x > mx) mx = x;
    }
    std::vector<double> out(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - mx);
        sum += out[i];
    }
    for (double& x : out) x /= sum;
    return out;
}

bool bitwise_equal(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
    return std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

} // namespace freshcl
