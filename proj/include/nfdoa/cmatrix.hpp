#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

namespace nfdoa {

using cd = std::complex<double>;
using CVector = std::vector<cd>;

// Dense row-major complex matrix, just enough linear algebra for this library.
class CMatrix {
  public:
    CMatrix() = default;
    CMatrix(int rows, int cols) : rows_(rows), cols_(cols), a_(static_cast<std::size_t>(rows) * cols) {}

    static CMatrix identity(int n) {
        CMatrix m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }

    cd& operator()(int i, int j) { return a_[static_cast<std::size_t>(i) * cols_ + j]; }
    const cd& operator()(int i, int j) const { return a_[static_cast<std::size_t>(i) * cols_ + j]; }

    const std::vector<cd>& data() const { return a_; }
    std::vector<cd>& data() { return a_; }

    CVector col(int j) const {
        CVector v(rows_);
        for (int i = 0; i < rows_; ++i) v[i] = (*this)(i, j);
        return v;
    }

    void set_col(int j, const CVector& v) {
        for (int i = 0; i < rows_; ++i) (*this)(i, j) = v[i];
    }

    CMatrix adjoint() const {
        CMatrix m(cols_, rows_);
        for (int i = 0; i < rows_; ++i)
            for (int j = 0; j < cols_; ++j) m(j, i) = std::conj((*this)(i, j));
        return m;
    }

    CMatrix operator*(const CMatrix& o) const {
        CMatrix m(rows_, o.cols_);
        for (int i = 0; i < rows_; ++i) {
            for (int k = 0; k < cols_; ++k) {
                cd aik = (*this)(i, k);
                if (aik == cd{}) continue;
                for (int j = 0; j < o.cols_; ++j) m(i, j) += aik * o(k, j);
            }
        }
        return m;
    }

    double frobenius_norm() const {
        double s = 0.0;
        for (const cd& z : a_) s += std::norm(z);
        return std::sqrt(s);
    }

    double max_abs() const {
        double s = 0.0;
        for (const cd& z : a_) s = std::max(s, std::abs(z));
        return s;
    }

  private:
    int rows_ = 0, cols_ = 0;
    std::vector<cd> a_;
};

inline CVector matvec(const CMatrix& m, const CVector& v) {
    CVector out(m.rows());
    for (int i = 0; i < m.rows(); ++i) {
        cd s{};
        for (int j = 0; j < m.cols(); ++j) s += m(i, j) * v[j];
        out[i] = s;
    }
    return out;
}

inline cd dot_conj(const CVector& a, const CVector& b) { // a^H b
    cd s{};
    for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
    return s;
}

inline double norm2(const CVector& a) {
    double s = 0.0;
    for (const cd& z : a) s += std::norm(z);
    return s;
}

} // namespace nfdoa
