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

// Entanglement length of noisy chains: the chain is grown one photon at a
// time, every middle photon is measured along y as soon as it leaves the
// loop, and the concurrence of the surviving (first, last) pair is tracked.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "loopcluster/errors.hpp"
#include "loopcluster/parallel.hpp"
#include "loopcluster/protocol.hpp"
#include "loopcluster/qcore.hpp"

namespace loopcluster {

inline constexpr double kConcurrenceTol = 1e-9;

/// Wootters concurrence of a two-qubit density matrix.
inline double concurrence(const CMatrix& rho) {
    if (rho.rows() != 4 || rho.cols() != 4) throw ArgumentError("concurrence needs a 4x4 density matrix");
    if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > kAccumulatedTol) throw ArgumentError("density matrix is not Hermitian");
    if (std::abs(rho.trace() - Complex(1.0)) > kAccumulatedTol) throw ArgumentError("density matrix is not normalized");
    CMatrix yy = CMatrix::Zero(4, 4);
    yy(0, 3) = -1.0;
    yy(1, 2) = 1.0;
    yy(2, 1) = 1.0;
    yy(3, 0) = -1.0;
    const CMatrix tilde = yy * rho.conjugate() * yy;
    // Eigenvalues of sqrt(sqrt(rho) tilde sqrt(rho)) equal the square roots
    // of the eigenvalues of rho tilde, and this route stays Hermitian.
    Eigen::SelfAdjointEigenSolver<CMatrix> es(rho);
    const Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    const CMatrix root = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
    CMatrix inner = root * tilde * root;
    inner = ((inner + inner.adjoint()) / 2.0).eval();
    Eigen::SelfAdjointEigenSolver<CMatrix> es2(inner, Eigen::EigenvaluesOnly);
    Eigen::VectorXd lam = es2.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    std::sort(lam.data(), lam.data() + lam.size(), std::greater<>());
    return std::clamp(lam(0) - lam(1) - lam(2) - lam(3), 0.0, 1.0);
}

struct ChainSweep {
    double v2 = 1.0;
    NoiseKind kind = NoiseKind::kDistinguishing;
    int n_max = 64;
    double tolerance = kConcurrenceTol;

    void validate() const {
        if (!(v2 > 0.0 && v2 <= 1.0)) throw ArgumentError("v2 must lie in (0, 1]");
        if (kind == NoiseKind::kIdeal && v2 != 1.0) throw ArgumentError("ideal sweeps need v2 = 1");
        if (n_max < 2) throw ArgumentError("n_max must be at least 2");
        if (!(tolerance >= 0.0)) throw ArgumentError("tolerance must be non-negative");
    }

    /// Distinguishing: M = v2. Depolarizing: delta = 1 - v2.
    NoiseModel noise() const {
        switch (kind) {
            case NoiseKind::kIdeal: return NoiseModel::ideal();
            case NoiseKind::kDistinguishing: return NoiseModel::distinguishing(v2);
            case NoiseKind::kDepolarizing: return NoiseModel::depolarizing(1.0 - v2);
        }
        return NoiseModel::ideal();
    }
};

/// Effective number of modes of the distinguishing model, 1/V2.
inline double mode_number(double v2) {
    if (!(v2 > 0.0)) throw ArgumentError("v2 must be positive");
    return 1.0 / v2;
}

/// Streaming chain with at most three live qubits: (first, exiting, loop).
class EndPairStream {
   public:
    explicit EndPairStream(const ChainSweep& sweep) : noise_(sweep.noise()) {
        sweep.validate();
        ps_ = inject_photon(ProtocolState{});
    }

    /// Adds one photon and measures the photon that just left the loop, unless
    /// it is the first one. `outcome` picks the y branch; the -1 branch is
    /// mapped onto the +1 branch by Z on the loop photon.
    void grow(int outcome = 1) {
        if (ps_.photons_emitted > 1) ps_ = rotate_loop_photon(ps_, 0.0);
        ps_ = inject_photon(ps_);
        ps_ = fuse(ps_, noise_);
        if (ps_.state.num_qubits() == 3) {
            BranchResult r = project(ps_.state, 1, Basis::kY, outcome);
            ps_.state = std::move(r.state);
            if (outcome == -1) ps_.state = apply_gate(ps_.state, SingleQubitGate::pauli_z(), 1);
        }
    }

    int photons() const { return ps_.photons_emitted; }

    /// Density matrix of photons (1, n).
    CMatrix end_pair() const {
        if (ps_.state.num_qubits() != 2) throw ProtocolOrderError("end pair needs at least two photons");
        return ps_.state.density();
    }

   private:
    NoiseModel noise_;
    ProtocolState ps_;
};

/// Reduced state of photons (1, n) after y-measuring photons 2..n-1.
inline CMatrix chain_end_pair(int n, const ChainSweep& sweep, const std::vector<int>& outcomes = {}) {
    sweep.validate();
    if (n < 2 || n > sweep.n_max) throw ArgumentError("n must lie in [2, n_max]");
    if (!outcomes.empty() && static_cast<int>(outcomes.size()) != n - 2) throw ArgumentError("need one y outcome per middle photon");
    EndPairStream s(sweep);
    for (int k = 2; k <= n; ++k) s.grow(outcomes.empty() || k < 3 ? 1 : outcomes[static_cast<std::size_t>(k - 3)]);
    return s.end_pair();
}

/// Checks that every y-outcome branch gives the same end-pair concurrence and
/// the same corrected state for chains up to `n_check` photons. Throws
/// OutcomeAsymmetryError on a mismatch.
inline void check_outcome_independence(const ChainSweep& sweep, int n_check = 6, double tol = 1e-9) {
    const int top = std::min(n_check, sweep.n_max);
    for (int n = 3; n <= top; ++n) {
        const CMatrix ref = chain_end_pair(n, sweep);
        const double cref = concurrence(ref);
        const int branches = 1 << (n - 2);
        for (int b = 1; b < branches; ++b) {
            std::vector<int> outcomes(static_cast<std::size_t>(n - 2));
            for (int k = 0; k < n - 2; ++k) outcomes[static_cast<std::size_t>(k)] = ((b >> k) & 1) ? -1 : 1;
            const CMatrix rho = chain_end_pair(n, sweep, outcomes);
            if (std::abs(concurrence(rho) - cref) > tol || (rho - ref).cwiseAbs().maxCoeff() > tol) {
                throw OutcomeAsymmetryError("y-outcome branch " + std::to_string(b) + " of the " + std::to_string(n) +
                                            "-photon chain differs from the +1 branch");
            }
        }
    }
}

struct EntanglementLengthResult {
    int L = 1;
    std::vector<std::pair<int, double>> concurrences;
    bool cap_limited = false;
    bool outcome_independent = false;
};

/// Grows the chain until the end-pair concurrence drops to the tolerance or
/// the cap is reached.
inline EntanglementLengthResult entanglement_length(const ChainSweep& sweep, bool verify_branches = true) {
    sweep.validate();
    EntanglementLengthResult res;
    if (verify_branches) {
        check_outcome_independence(sweep);
        res.outcome_independent = true;
    }
    EndPairStream s(sweep);
    for (int n = 2; n <= sweep.n_max; ++n) {
        s.grow();
        const double c = concurrence(s.end_pair());
        res.concurrences.emplace_back(n, c);
        if (!(c > sweep.tolerance)) return res;
        res.L = n;
    }
    res.cap_limited = true;
    return res;
}

/// (1/3)^{1/(n-1)}.
inline double min_v2_threshold(int n) {
    if (n < 2) throw ArgumentError("threshold needs n >= 2");
    if (n == 2) return 1.0 / 3.0;
    return std::pow(1.0 / 3.0, 1.0 / (n - 1));
}

/// v2^{n-1}.
inline double vn_from_v2(double v2, int n) {
    if (!(v2 > 0.0 && v2 <= 1.0)) throw ArgumentError("v2 must lie in (0, 1]");
    if (n < 2) throw ArgumentError("n must be at least 2");
    return std::pow(v2, n - 1);
}

/// max{n : v2^{n-1} > 1/3}, capped.
inline int depolarizing_length_threshold(double v2, int n_max = 64) {
    if (!(v2 > 0.0 && v2 <= 1.0)) throw ArgumentError("v2 must lie in (0, 1]");
    int L = 1;
    for (int n = 2; n <= n_max; ++n) {
        if (vn_from_v2(v2, n) > 1.0 / 3.0) L = n;
        else break;
    }
    return L;
}

struct EntanglementLengthRow {
    double v2 = 0.0;
    int L = 0;
    double last_concurrence = 0.0;
    bool cap_limited = false;
};

/// L over a v2 grid; rows keep the grid order.
inline std::vector<EntanglementLengthRow> entanglement_length_curve(const std::vector<double>& v2s, NoiseKind kind,
                                                                    int n_max = 64, int threads = 1,
                                                                    bool verify_branches = false) {
    std::vector<EntanglementLengthRow> rows(v2s.size());
    parallel_for(rows.size(), threads, [&](std::size_t i) {
        ChainSweep sw{v2s[i], kind, n_max, kConcurrenceTol};
        const EntanglementLengthResult r = entanglement_length(sw, verify_branches);
        double last = 0.0;
        for (const auto& [n, c] : r.concurrences) {
            if (n == r.L) last = c;
        }
        rows[i] = {v2s[i], r.L, last, r.cap_limited};
    });
    return rows;
}

}  // namespace loopcluster
