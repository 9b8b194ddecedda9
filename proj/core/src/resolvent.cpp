#include "dmft_sgd/resolvent.hpp"

#include <algorithm>
#include <cmath>

#include "dmft_sgd/errors.hpp"

namespace dmft_sgd {

namespace {

void check_causal_square(const TwoTimeKernel& A) {
    if (A.kind() != KernelKind::Response) throw StructuralError("resolvent needs a response (causal) kernel");
    if (A.rows() != A.cols()) throw StructuralError("resolvent needs square blocks");
    if (!A.is_causal()) throw StructuralError("resolvent input is not causal (nonzero block with s >= t)");
}

// c += alpha * a * b for row-major k x k blocks
inline void gemm_acc(int k, double alpha, const double* a, const double* b, double* c) {
    for (int i = 0; i < k; ++i)
        for (int l = 0; l < k; ++l) {
            const double ail = alpha * a[i * k + l];
            if (ail == 0.0) continue;
            for (int j = 0; j < k; ++j) c[i * k + j] += ail * b[l * k + j];
        }
}

double max_abs(const TwoTimeKernel& K) {
    double m = 0.0;
    for (double v : K.data()) m = std::max(m, std::abs(v));
    return m;
}

}  // namespace

TwoTimeKernel volterra_resolvent(const TwoTimeKernel& A) {
    check_causal_square(A);
    const std::size_t P = A.points();
    const int k = A.rows();
    const double delta = A.grid().delta;
    TwoTimeKernel K(A.grid(), k, k, KernelKind::Response);
    for (std::size_t s = 0; s < P; ++s) {
        for (std::size_t t = s + 1; t < P; ++t) {
            double* out = K.block_data(t, s);
            std::copy_n(A.block_data(t, s), k * k, out);
            for (std::size_t r = s + 1; r < t; ++r) gemm_acc(k, delta, A.block_data(t, r), K.block_data(r, s), out);
        }
    }
    return K;
}

double resolvent_left_residual(const TwoTimeKernel& A, const TwoTimeKernel& K) {
    if (!A.same_shape(K)) throw StructuralError("kernel shapes differ");
    const std::size_t P = A.points();
    const int k = A.rows();
    const double delta = A.grid().delta;
    std::vector<double> tmp(static_cast<std::size_t>(k * k));
    double res = 0.0;
    for (std::size_t t = 0; t < P; ++t)
        for (std::size_t s = 0; s < t; ++s) {
            std::copy_n(A.block_data(t, s), k * k, tmp.data());
            for (std::size_t r = s + 1; r < t; ++r) gemm_acc(k, delta, A.block_data(t, r), K.block_data(r, s), tmp.data());
            for (int i = 0; i < k * k; ++i) res = std::max(res, std::abs(tmp[i] - K.block_data(t, s)[i]));
        }
    return res / std::max(1.0, max_abs(K));
}

double resolvent_right_residual(const TwoTimeKernel& A, const TwoTimeKernel& K) {
    if (!A.same_shape(K)) throw StructuralError("kernel shapes differ");
    const std::size_t P = A.points();
    const int k = A.rows();
    const double delta = A.grid().delta;
    std::vector<double> tmp(static_cast<std::size_t>(k * k));
    double res = 0.0;
    for (std::size_t t = 0; t < P; ++t)
        for (std::size_t s = 0; s < t; ++s) {
            std::copy_n(A.block_data(t, s), k * k, tmp.data());
            for (std::size_t r = s + 1; r < t; ++r) gemm_acc(k, delta, K.block_data(t, r), A.block_data(r, s), tmp.data());
            for (int i = 0; i < k * k; ++i) res = std::max(res, std::abs(tmp[i] - K.block_data(t, s)[i]));
        }
    return res / std::max(1.0, max_abs(K));
}

}  // namespace dmft_sgd
