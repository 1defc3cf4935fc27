#include "oracles.hpp"

#include <cmath>
#include <complex>
#include <vector>

namespace oracle {

namespace {

using cd = std::complex<double>;
using Mat = std::vector<cd>;  // row-major n*n

Mat kron(const Mat& a, int na, const Mat& b, int nb) {
    const int n = na * nb;
    Mat out(static_cast<size_t>(n) * n);
    for (int i = 0; i < na; ++i)
        for (int j = 0; j < na; ++j)
            for (int k = 0; k < nb; ++k)
                for (int l = 0; l < nb; ++l)
                    out[(i * nb + k) * static_cast<size_t>(n) + (j * nb + l)] =
                        a[i * static_cast<size_t>(na) + j] * b[k * static_cast<size_t>(nb) + l];
    return out;
}

Mat matmul(const Mat& a, const Mat& b, int n) {
    Mat out(static_cast<size_t>(n) * n, cd{0.0, 0.0});
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) {
            const cd aik = a[i * static_cast<size_t>(n) + k];
            if (aik == cd{0.0, 0.0}) continue;
            for (int j = 0; j < n; ++j)
                out[i * static_cast<size_t>(n) + j] += aik * b[k * static_cast<size_t>(n) + j];
        }
    return out;
}

Mat dagger(const Mat& a, int n) {
    Mat out(static_cast<size_t>(n) * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            out[j * static_cast<size_t>(n) + i] = std::conj(a[i * static_cast<size_t>(n) + j]);
    return out;
}

// Werner state: (1-F)/3 * I4 + (4F-1)/3 * |phi+><phi+|
Mat werner(double f) {
    Mat rho(16, cd{0.0, 0.0});
    const double id_w = (1.0 - f) / 3.0;
    const double bell_w = (4.0 * f - 1.0) / 3.0;
    for (int i = 0; i < 4; ++i) rho[i * 4 + static_cast<size_t>(i)] += id_w;
    // |phi+> = (|00> + |11>)/sqrt(2)
    for (int i : {0, 3})
        for (int j : {0, 3}) rho[i * 4 + static_cast<size_t>(j)] += bell_w * 0.5;
    return rho;
}

const Mat kI2{cd{1, 0}, cd{0, 0}, cd{0, 0}, cd{1, 0}};
const Mat kX{cd{0, 0}, cd{1, 0}, cd{1, 0}, cd{0, 0}};
const Mat kZ{cd{1, 0}, cd{0, 0}, cd{0, 0}, cd{-1, 0}};

}  // namespace

double swap_fidelity_dm(double f1, double f2) {
    // qubit order (A, B1, B2, C); pairs A-B1 and B2-C
    const Mat rho = kron(werner(f1), 4, werner(f2), 4);

    const double s = 1.0 / std::sqrt(2.0);
    // bell vectors indexed by (b1, b2)
    const std::vector<std::vector<cd>> bells = {
        {s, 0, 0, s},    // phi+
        {0, s, s, 0},    // psi+
        {s, 0, 0, -s},   // phi-
        {0, s, -s, 0},   // psi-
    };
    // Pauli corrections on C mapping the post-measurement Bell state to phi+
    const std::vector<Mat> corrections = {kI2, kX, kZ, matmul(kZ, kX, 2)};

    double fidelity = 0.0;
    for (size_t m = 0; m < bells.size(); ++m) {
        // project (B1, B2) onto the bell vector, leaving a 4x4 state on (A, C)
        Mat sigma(16, cd{0.0, 0.0});
        for (int a = 0; a < 2; ++a)
            for (int c = 0; c < 2; ++c)
                for (int a2 = 0; a2 < 2; ++a2)
                    for (int c2 = 0; c2 < 2; ++c2) {
                        cd acc{0.0, 0.0};
                        for (int b1 = 0; b1 < 2; ++b1)
                            for (int b2 = 0; b2 < 2; ++b2)
                                for (int b1p = 0; b1p < 2; ++b1p)
                                    for (int b2p = 0; b2p < 2; ++b2p) {
                                        const cd amp = std::conj(bells[m][b1 * 2 + b2]) *
                                                       bells[m][b1p * 2 + b2p];
                                        if (amp == cd{0.0, 0.0}) continue;
                                        const int row = ((a * 2 + b1) * 2 + b2) * 2 + c;
                                        const int col = ((a2 * 2 + b1p) * 2 + b2p) * 2 + c2;
                                        acc += amp * rho[row * 16 + static_cast<size_t>(col)];
                                    }
                        sigma[(a * 2 + c) * 4 + static_cast<size_t>(a2 * 2 + c2)] = acc;
                    }
        const Mat u = kron(kI2, 2, corrections[m], 2);
        const Mat corrected = matmul(matmul(u, sigma, 4), dagger(u, 4), 4);
        // <phi+| corrected |phi+>
        fidelity += 0.5 * std::real(corrected[0 * 4 + 0] + corrected[0 * 4 + 3] +
                                    corrected[3 * 4 + 0] + corrected[3 * 4 + 3]);
    }
    return fidelity;
}

double distill_fidelity_dm(double f1, double f2) {
    // qubit order (A1, B1, A2, B2); A1-B1 is the kept pair
    Mat rho = kron(werner(f1), 4, werner(f2), 4);

    // bilateral CNOT: A1 controls A2, B1 controls B2 (a permutation)
    Mat u(16 * 16, cd{0.0, 0.0});
    for (int a1 = 0; a1 < 2; ++a1)
        for (int b1 = 0; b1 < 2; ++b1)
            for (int a2 = 0; a2 < 2; ++a2)
                for (int b2 = 0; b2 < 2; ++b2) {
                    const int in = ((a1 * 2 + b1) * 2 + a2) * 2 + b2;
                    const int out = ((a1 * 2 + b1) * 2 + (a2 ^ a1)) * 2 + (b2 ^ b1);
                    u[out * 16 + static_cast<size_t>(in)] = cd{1.0, 0.0};
                }
    rho = matmul(matmul(u, rho, 16), dagger(u, 16), 16);

    // measure A2, B2 in Z; keep equal outcomes, renormalize the kept pair
    Mat sigma(16, cd{0.0, 0.0});
    for (int m = 0; m < 2; ++m)
        for (int a1 = 0; a1 < 2; ++a1)
            for (int b1 = 0; b1 < 2; ++b1)
                for (int a1p = 0; a1p < 2; ++a1p)
                    for (int b1p = 0; b1p < 2; ++b1p) {
                        const int row = ((a1 * 2 + b1) * 2 + m) * 2 + m;
                        const int col = ((a1p * 2 + b1p) * 2 + m) * 2 + m;
                        sigma[(a1 * 2 + b1) * 4 + static_cast<size_t>(a1p * 2 + b1p)] +=
                            rho[row * 16 + static_cast<size_t>(col)];
                    }
    double p = 0.0;
    for (int i = 0; i < 4; ++i) p += std::real(sigma[i * 4 + static_cast<size_t>(i)]);
    const double overlap = 0.5 * std::real(sigma[0 * 4 + 0] + sigma[0 * 4 + 3] +
                                           sigma[3 * 4 + 0] + sigma[3 * 4 + 3]);
    return overlap / p;
}

double invert_swap_bisect(double f_target) {
    auto swap = [](double f) { return f * f + (1.0 - f) * (1.0 - f) / 3.0; };
    double lo = 0.25, hi = 1.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (swap(mid) < f_target) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace oracle
