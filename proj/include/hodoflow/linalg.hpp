#pragma once

#include <cmath>
#include <cstring>

// Dense helpers for the tiny (n <= 3) systems that show up in the velocity
// Jacobians and momentum matrices. Gaussian elimination with partial pivoting.

namespace hodoflow::linalg {

inline double det(const double A[3][3], int n) {
    double m[3][3];
    std::memcpy(m, A, sizeof(m));
    double d = 1.0;
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
        if (m[piv][col] == 0.0) return 0.0;
        if (piv != col) {
            for (int c = 0; c < n; ++c) std::swap(m[piv][c], m[col][c]);
            d = -d;
        }
        d *= m[col][col];
        for (int r = col + 1; r < n; ++r) {
            const double f = m[r][col] / m[col][col];
            for (int c = col; c < n; ++c) m[r][c] -= f * m[col][c];
        }
    }
    return d;
}

// Solves A x = b; returns false on a (numerically) singular pivot.
inline bool solve(const double A[3][3], const double b[3], double x[3], int n) {
    double m[3][4];
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) m[r][c] = A[r][c];
        m[r][n] = b[r];
    }
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
        if (m[piv][col] == 0.0) return false;
        if (piv != col)
            for (int c = col; c <= n; ++c) std::swap(m[piv][c], m[col][c]);
        for (int r = col + 1; r < n; ++r) {
            const double f = m[r][col] / m[col][col];
            for (int c = col; c <= n; ++c) m[r][c] -= f * m[col][c];
        }
    }
    for (int r = n - 1; r >= 0; --r) {
        double acc = m[r][n];
        for (int c = r + 1; c < n; ++c) acc -= m[r][c] * x[c];
        x[r] = acc / m[r][r];
    }
    return true;
}

inline bool invert(const double A[3][3], double Ainv[3][3], int n) {
    for (int col = 0; col < n; ++col) {
        double e[3] = {0, 0, 0};
        e[col] = 1.0;
        double x[3];
        if (!solve(A, e, x, n)) return false;
        for (int r = 0; r < n; ++r) Ainv[r][col] = x[r];
    }
    return true;
}

}  // namespace hodoflow::linalg
