#include "vcgan/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "vcgan/errors.hpp"

namespace vcgan {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        throw ShapeError("matrix data length " + std::to_string(data_.size()) + " != " +
                         std::to_string(rows_) + "x" + std::to_string(cols_));
    }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) : rows_(rows.size()) {
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) throw ShapeError("ragged matrix initializer");
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Matrix::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Matrix hconcat(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) throw ShapeError("hconcat: row counts differ");
    Matrix out(a.rows(), a.cols() + b.cols());
    for (std::size_t r = 0; r < a.rows(); ++r) {
        auto dst = out.row(r);
        std::copy(a.row(r).begin(), a.row(r).end(), dst.begin());
        std::copy(b.row(r).begin(), b.row(r).end(), dst.begin() + static_cast<std::ptrdiff_t>(a.cols()));
    }
    return out;
}

Matrix vconcat(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols()) throw ShapeError("vconcat: column counts differ");
    std::vector<double> data(a.flat().begin(), a.flat().end());
    data.insert(data.end(), b.flat().begin(), b.flat().end());
    return Matrix(a.rows() + b.rows(), a.cols(), std::move(data));
}

Matrix column_slice(const Matrix& m, std::size_t first, std::size_t count) {
    if (first + count > m.cols()) throw ShapeError("column_slice out of range");
    Matrix out(m.rows(), count);
    for (std::size_t r = 0; r < m.rows(); ++r) {
        auto src = m.row(r).subspan(first, count);
        std::copy(src.begin(), src.end(), out.row(r).begin());
    }
    return out;
}

} // namespace vcgan
