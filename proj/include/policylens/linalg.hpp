#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "policylens/error.hpp"

namespace policylens {

/// Dense row-major matrix of doubles. Sized for the desk-scale problems in
/// this library (panels of a few hundred rows, tables of at most 4 columns).
class Matrix {
public:
    Matrix() = default;
    Matrix(int rows, int cols, double fill = 0.0)
        : rows_(rows), cols_(cols), d_(static_cast<size_t>(rows) * cols, fill) {}

    static Matrix identity(int n) {
        Matrix m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }

    double& operator()(int i, int j) { return d_[static_cast<size_t>(i) * cols_ + j]; }
    double operator()(int i, int j) const { return d_[static_cast<size_t>(i) * cols_ + j]; }

    Matrix transposed() const {
        Matrix t(cols_, rows_);
        for (int i = 0; i < rows_; ++i)
            for (int j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

    Matrix operator*(const Matrix& other) const {
        if (cols_ != other.rows_) throw Error("matrix product: dimension mismatch");
        Matrix out(rows_, other.cols_);
        for (int i = 0; i < rows_; ++i)
            for (int k = 0; k < cols_; ++k) {
                double a = (*this)(i, k);
                if (a == 0.0) continue;
                for (int j = 0; j < other.cols_; ++j) out(i, j) += a * other(k, j);
            }
        return out;
    }

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> d_;
};

inline double frobenius_norm(const Matrix& m) {
    double s = 0.0;
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j) s += m(i, j) * m(i, j);
    return std::sqrt(s);
}

struct LeastSquaresFit {
    std::vector<double> beta;
    Matrix r;  // upper-triangular K x K factor, kept for covariance work
};

/// Least squares via Householder QR. Rank deficiency is reported against the
/// first dependent column: |R_kk| < 1e-10 * max|R| fails with that column's
/// name when names are supplied.
inline LeastSquaresFit householder_least_squares(Matrix a, std::vector<double> y,
                                                 std::span<const std::string> names = {}) {
    const int n = a.rows();
    const int k = a.cols();
    if (static_cast<int>(y.size()) != n) throw Error("least squares: y length mismatch");
    if (n < k) throw Error("least squares: fewer rows than columns");

    for (int j = 0; j < k; ++j) {
        double norm = 0.0;
        for (int i = j; i < n; ++i) norm += a(i, j) * a(i, j);
        norm = std::sqrt(norm);
        if (norm == 0.0) continue;  // dependent column; caught by the rank check

        const double alpha = a(j, j) >= 0.0 ? -norm : norm;
        std::vector<double> u(n - j);
        u[0] = a(j, j) - alpha;
        for (int i = j + 1; i < n; ++i) u[i - j] = a(i, j);
        double unorm2 = 0.0;
        for (double v : u) unorm2 += v * v;
        a(j, j) = alpha;
        for (int i = j + 1; i < n; ++i) a(i, j) = 0.0;
        if (unorm2 == 0.0) continue;

        for (int col = j + 1; col < k; ++col) {
            double dot = 0.0;
            for (int i = j; i < n; ++i) dot += u[i - j] * a(i, col);
            const double f = 2.0 * dot / unorm2;
            for (int i = j; i < n; ++i) a(i, col) -= f * u[i - j];
        }
        double dot = 0.0;
        for (int i = j; i < n; ++i) dot += u[i - j] * y[i];
        const double f = 2.0 * dot / unorm2;
        for (int i = j; i < n; ++i) y[i] -= f * u[i - j];
    }

    double rmax = 0.0;
    for (int i = 0; i < k; ++i)
        for (int j = i; j < k; ++j) rmax = std::max(rmax, std::abs(a(i, j)));
    for (int j = 0; j < k; ++j) {
        if (std::abs(a(j, j)) < 1e-10 * rmax || rmax == 0.0) {
            std::string which = j < static_cast<int>(names.size())
                                    ? "'" + names[j] + "'"
                                    : "index " + std::to_string(j);
            throw Error("collinear design: column " + which + " is linearly dependent");
        }
    }

    LeastSquaresFit fit;
    fit.beta.assign(k, 0.0);
    for (int i = k - 1; i >= 0; --i) {
        double s = y[i];
        for (int j = i + 1; j < k; ++j) s -= a(i, j) * fit.beta[j];
        fit.beta[i] = s / a(i, i);
    }
    fit.r = Matrix(k, k);
    for (int i = 0; i < k; ++i)
        for (int j = i; j < k; ++j) fit.r(i, j) = a(i, j);
    return fit;
}

/// Inverse of a small symmetric positive-definite-ish matrix by Gauss-Jordan
/// with partial pivoting. Used for the sandwich bread (X'X)^{-1}.
inline Matrix invert_small(Matrix a) {
    const int n = a.rows();
    if (a.cols() != n) throw Error("invert_small: matrix not square");
    Matrix inv = Matrix::identity(n);
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        for (int i = col + 1; i < n; ++i)
            if (std::abs(a(i, col)) > std::abs(a(pivot, col))) pivot = i;
        if (a(pivot, col) == 0.0) throw Error("invert_small: singular matrix");
        if (pivot != col) {
            for (int j = 0; j < n; ++j) {
                std::swap(a(pivot, j), a(col, j));
                std::swap(inv(pivot, j), inv(col, j));
            }
        }
        const double p = a(col, col);
        for (int j = 0; j < n; ++j) {
            a(col, j) /= p;
            inv(col, j) /= p;
        }
        for (int i = 0; i < n; ++i) {
            if (i == col) continue;
            const double f = a(i, col);
            if (f == 0.0) continue;
            for (int j = 0; j < n; ++j) {
                a(i, j) -= f * a(col, j);
                inv(i, j) -= f * inv(col, j);
            }
        }
    }
    return inv;
}

struct SymmetricEigen {
    std::vector<double> values;  // descending
    Matrix vectors;              // columns are the matching eigenvectors
    int sweeps = 0;
};

/// Cyclic Jacobi eigendecomposition of a small symmetric matrix. Converges
/// when the off-diagonal norm drops below tol * max(1, ||A||_F) of the input.
inline SymmetricEigen jacobi_eigen_symmetric(Matrix a, double tol = 1e-14, int max_sweeps = 100) {
    const int n = a.rows();
    if (a.cols() != n) throw Error("jacobi: matrix not square");
    Matrix v = Matrix::identity(n);
    const double threshold = tol * std::max(1.0, frobenius_norm(a));

    auto off_norm = [&] {
        double s = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (i != j) s += a(i, j) * a(i, j);
        return std::sqrt(s);
    };

    int sweep = 0;
    while (off_norm() >= threshold) {
        if (sweep >= max_sweeps)
            throw Error("jacobi: no convergence after " + std::to_string(max_sweeps) +
                        " sweeps (off-diagonal norm " + std::to_string(off_norm()) + ")");
        ++sweep;
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;

                for (int i = 0; i < n; ++i) {
                    const double aip = a(i, p), aiq = a(i, q);
                    a(i, p) = c * aip - s * aiq;
                    a(i, q) = s * aip + c * aiq;
                }
                for (int j = 0; j < n; ++j) {
                    const double apj = a(p, j), aqj = a(q, j);
                    a(p, j) = c * apj - s * aqj;
                    a(q, j) = s * apj + c * aqj;
                }
                for (int i = 0; i < n; ++i) {
                    const double vip = v(i, p), viq = v(i, q);
                    v(i, p) = c * vip - s * viq;
                    v(i, q) = s * vip + c * viq;
                }
            }
        }
    }

    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](int x, int y) { return a(x, x) > a(y, y); });

    SymmetricEigen out;
    out.values.resize(n);
    out.vectors = Matrix(n, n);
    for (int k = 0; k < n; ++k) {
        out.values[k] = a(order[k], order[k]);
        for (int i = 0; i < n; ++i) out.vectors(i, k) = v(i, order[k]);
    }
    out.sweeps = sweep;
    return out;
}

}
