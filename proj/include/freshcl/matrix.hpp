#pragma once

#include <cstddef>
#include <vector>

namespace freshcl {

// Dense row-major matrix of doubles. All entries must be finite.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols);
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    static Matrix identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    double& at(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double at(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    const std::vector<double>& values() const { return data_; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& m);

// Thin Q factor of a Householder QR, with each R diagonal forced positive
// so the result is deterministic for a given input.
Matrix thin_qr_q(const Matrix& a);

std::vector<double> matvec(const Matrix& m, const std::vector<double>& v);
Matrix outer(const std::vector<double>& u, const std::vector<double>& v);
std::vector<double> column(const Matrix& m, std::size_t j);
void set_column(Matrix& m, std::size_t j, const std::vector<double>& v);

double dot(const std::vector<double>& a, const std::vector<double>& b);
double norm(const std::vector<double>& v);
std::vector<double> l2_normalize(const std::vector<double>& v);
std::vector<double> softmax(const std::vector<double>& logits);

bool bitwise_equal(const Matrix& a, const Matrix& b);

} // namespace freshcl
