// Copyright 2026 The loopcluster Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Independent reference computations for the test suites. Everything here is
// built from explicit Kronecker products of full matrices so that it shares
// no kernels with the library.

#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

namespace oracle {

using C = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

inline Mat kron(const Mat& a, const Mat& b) {
    Mat out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

inline Mat kron_all(const std::vector<Mat>& ms) {
    Mat out = Mat::Identity(1, 1);
    for (const Mat& m : ms) out = kron(out, m);
    return out;
}

inline Mat I2() { return Mat::Identity(2, 2); }
inline Mat X() {
    Mat m(2, 2);
    m << 0, 1, 1, 0;
    return m;
}
inline Mat Y() {
    Mat m(2, 2);
    m << 0, C(0, -1), C(0, 1), 0;
    return m;
}
inline Mat Z() {
    Mat m(2, 2);
    m << 1, 0, 0, -1;
    return m;
}
inline Mat H() {
    Mat m(2, 2);
    const double s = 1.0 / std::sqrt(2.0);
    m << s, s, s, -s;
    return m;
}
inline Mat Zphi(double phi) {
    Mat m = Mat::Zero(2, 2);
    m(0, 0) = std::exp(C(0, -phi / 2));
    m(1, 1) = std::exp(C(0, phi / 2));
    return m;
}

inline Mat letter(char c) {
    switch (c) {
        case 'X': return X();
        case 'Y': return Y();
        case 'Z': return Z();
        default: return I2();
    }
}

/// Full matrix of a Pauli word such as "XIZ".
inline Mat pauli_matrix(const std::string& word) {
    std::vector<Mat> ms;
    for (char c : word) ms.push_back(letter(c));
    return kron_all(ms);
}

/// U acting on qubit k of n.
inline Mat on(const Mat& u, int k, int n) {
    std::vector<Mat> ms(static_cast<std::size_t>(n), I2());
    ms[static_cast<std::size_t>(k)] = u;
    return kron_all(ms);
}

/// Two-qubit U acting on (k, k+1) of n.
inline Mat on_pair(const Mat& u, int k, int n) {
    Mat left = Mat::Identity(Eigen::Index{1} << k, Eigen::Index{1} << k);
    Mat right = Mat::Identity(Eigen::Index{1} << (n - k - 2), Eigen::Index{1} << (n - k - 2));
    return kron(kron(left, u), right);
}

inline Mat plus_density() { return Mat::Constant(2, 2, 0.5); }

inline Mat even_projector() { return (kron(I2(), I2()) + kron(Z(), Z())) / 2.0; }
inline Mat odd_operator() { return (kron(I2(), Z()) + kron(Z(), I2())) / 2.0; }

/// Chain density matrix from full matrices. delta is white noise on the
/// fused pair (uniform Pauli twirl).
inline Mat chain(int n, double phi, double M = 1.0, double delta = 0.0) {
    Mat rho = plus_density();
    for (int k = 1; k < n; ++k) {
        if (k > 1) {
            const Mat u = on(H() * Zphi(phi), k - 1, k);
            rho = u * rho * u.adjoint();
        }
        rho = kron(rho, plus_density());
        const int m = k + 1;
        const Mat e0 = on_pair(even_projector(), k - 1, m);
        const Mat e1 = on_pair(odd_operator(), k - 1, m);
        Mat r = M * e0 * rho * e0 + (1 - M) / 2 * (e0 * rho * e0 + e1 * rho * e1);
        r /= r.trace();
        if (delta > 0) {
            Mat acc = Mat::Zero(r.rows(), r.cols());
            const std::vector<Mat> ps{I2(), X(), Y(), Z()};
            for (const Mat& a : ps)
                for (const Mat& b : ps) {
                    const Mat u = on_pair(kron(a, b), k - 1, m);
                    acc += u * r * u.adjoint();
                }
            r = (1 - delta) * r + delta / 16.0 * acc;
        }
        rho = r;
    }
    const Mat u = on(Zphi(phi), n - 1, n);
    return u * rho * u.adjoint();
}

/// Trace over every qubit not in `keep` (ascending positions), by index loops.
inline Mat partial_trace(const Mat& rho, int n, const std::vector<int>& keep) {
    std::vector<int> traced;
    for (int q = 0; q < n; ++q)
        if (std::find(keep.begin(), keep.end(), q) == keep.end()) traced.push_back(q);
    const int nk = static_cast<int>(keep.size());
    const Eigen::Index dk = Eigen::Index{1} << nk;
    Mat out = Mat::Zero(dk, dk);
    const Eigen::Index dim = Eigen::Index{1} << n;
    auto bit = [n](Eigen::Index idx, int q) { return (idx >> (n - 1 - q)) & 1; };
    for (Eigen::Index r = 0; r < dim; ++r) {
        for (Eigen::Index c = 0; c < dim; ++c) {
            bool same = true;
            for (int q : traced) same = same && bit(r, q) == bit(c, q);
            if (!same) continue;
            Eigen::Index rk = 0, ck = 0;
            for (int q : keep) {
                rk = (rk << 1) | bit(r, q);
                ck = (ck << 1) | bit(c, q);
            }
            out(rk, ck) += rho(r, c);
        }
    }
    return out;
}

/// Brute-force end pair: full chain at phi = 0 with the last photon
/// unrotated, every middle photon projected on y(+/-), middles traced out.
/// No Pauli-frame correction is applied.
inline Mat end_pair(int n, double M, double delta, const std::vector<int>& outcomes) {
    Mat rho = chain(n, 0.0, M, delta);
    for (int k = 1; k < n - 1; ++k) {
        const int o = outcomes.empty() ? 1 : outcomes[static_cast<std::size_t>(k - 1)];
        Vec y(2);
        y << 1.0 / std::sqrt(2.0), C(0, o / std::sqrt(2.0));
        const Mat p = on(y * y.adjoint(), k, n);
        rho = p * rho * p;
    }
    rho /= rho.trace();
    return partial_trace(rho, n, {0, n - 1});
}

/// Wootters concurrence through the non-Hermitian product rho * rho_tilde.
inline double concurrence(const Mat& rho) {
    const Mat yy = kron(Y(), Y());
    const Mat r = rho * yy * rho.conjugate() * yy;
    Eigen::ComplexEigenSolver<Mat> es(r);
    std::vector<double> lam;
    for (Eigen::Index i = 0; i < 4; ++i) lam.push_back(std::sqrt(std::max(0.0, es.eigenvalues()(i).real())));
    std::sort(lam.begin(), lam.end(), std::greater<>());
    return std::max(0.0, lam[0] - lam[1] - lam[2] - lam[3]);
}

inline Mat bell_phi_plus() {
    Vec v = Vec::Zero(4);
    v(0) = v(3) = 1.0 / std::sqrt(2.0);
    return v * v.adjoint();
}

inline Mat werner(double p) { return p * bell_phi_plus() + (1 - p) / 4.0 * Mat::Identity(4, 4); }

}  // namespace oracle
