#pragma once

// Dense kernels shared by the graph ops. Every output element is produced by
// the same fixed sequence of fused multiply-adds regardless of how many rows
// are processed, so a row's result never depends on its neighbours.

#include <cmath>
#include <cstdint>
#include <vector>

namespace mtp::numerics::kernels {

template <typename T>
inline T dot(const T *__restrict a, const T *__restrict b, std::int64_t n) {
    T acc[8] = {};
    std::int64_t i = 0;
    for (; i + 8 <= n; i += 8) {
        for (int l = 0; l < 8; ++l) acc[l] = std::fma(a[i + l], b[i + l], acc[l]);
    }
    T s = ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
    for (; i < n; ++i) s = std::fma(a[i], b[i], s);
    return s;
}

// y[j] += a * x[j]
template <typename T>
inline void axpy(T a, const T *__restrict x, T *__restrict y, std::int64_t n) {
    for (std::int64_t j = 0; j < n; ++j) y[j] = std::fma(a, x[j], y[j]);
}

// C(m,n) (+)= A(m,k) * B(k,n)
template <typename T>
void gemm_nn(std::int64_t m, std::int64_t k, std::int64_t n, const T *__restrict a, const T *__restrict b,
             T *__restrict c, bool accumulate) {
    if (!accumulate) {
        for (std::int64_t i = 0; i < m * n; ++i) c[i] = T(0);
    }
    std::int64_t i = 0;
    for (; i + 4 <= m; i += 4) {
        T *__restrict c0 = c + (i + 0) * n;
        T *__restrict c1 = c + (i + 1) * n;
        T *__restrict c2 = c + (i + 2) * n;
        T *__restrict c3 = c + (i + 3) * n;
        for (std::int64_t p = 0; p < k; ++p) {
            const T a0 = a[(i + 0) * k + p];
            const T a1 = a[(i + 1) * k + p];
            const T a2 = a[(i + 2) * k + p];
            const T a3 = a[(i + 3) * k + p];
            const T *__restrict bp = b + p * n;
            for (std::int64_t j = 0; j < n; ++j) {
                const T bv = bp[j];
                c0[j] = std::fma(a0, bv, c0[j]);
                c1[j] = std::fma(a1, bv, c1[j]);
                c2[j] = std::fma(a2, bv, c2[j]);
                c3[j] = std::fma(a3, bv, c3[j]);
            }
        }
    }
    for (; i < m; ++i) {
        T *__restrict ci = c + i * n;
        for (std::int64_t p = 0; p < k; ++p) axpy(a[i * k + p], b + p * n, ci, n);
    }
}

// C(k,n) += A(m,k)^T * B(m,n), rows of A/B consumed in ascending order.
template <typename T>
void gemm_tn_acc(std::int64_t m, std::int64_t k, std::int64_t n, const T *__restrict a, const T *__restrict b,
                 T *__restrict c) {
    std::int64_t i = 0;
    for (; i + 4 <= m; i += 4) {
        const T *__restrict b0 = b + (i + 0) * n;
        const T *__restrict b1 = b + (i + 1) * n;
        const T *__restrict b2 = b + (i + 2) * n;
        const T *__restrict b3 = b + (i + 3) * n;
        for (std::int64_t p = 0; p < k; ++p) {
            const T a0 = a[(i + 0) * k + p];
            const T a1 = a[(i + 1) * k + p];
            const T a2 = a[(i + 2) * k + p];
            const T a3 = a[(i + 3) * k + p];
            T *__restrict cp = c + p * n;
            for (std::int64_t j = 0; j < n; ++j) {
                T v = cp[j];
                v = std::fma(a0, b0[j], v);
                v = std::fma(a1, b1[j], v);
                v = std::fma(a2, b2[j], v);
                v = std::fma(a3, b3[j], v);
                cp[j] = v;
            }
        }
    }
    for (; i < m; ++i) {
        const T *__restrict bi = b + i * n;
        const T *__restrict ai = a + i * k;
        for (std::int64_t p = 0; p < k; ++p) axpy(ai[p], bi, c + p * n, n);
    }
}

template <typename T>
std::vector<T> transposed(const T *a, std::int64_t rows, std::int64_t cols) {
    std::vector<T> out(static_cast<std::size_t>(rows * cols));
    for (std::int64_t r = 0; r < rows; ++r) {
        for (std::int64_t c = 0; c < cols; ++c) out[c * rows + r] = a[r * cols + c];
    }
    return out;
}

}  // namespace mtp::numerics::kernels
