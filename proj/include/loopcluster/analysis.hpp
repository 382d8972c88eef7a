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

// Observables on chain states: visibilities, X-basis amplitude tables,
// stabilizer generators, phase scans and HOM/g2 helpers.

#pragma once

#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "loopcluster/errors.hpp"
#include "loopcluster/parallel.hpp"
#include "loopcluster/protocol.hpp"
#include "loopcluster/qcore.hpp"

namespace loopcluster {

/// Which correlator a scan evaluates: X on every photon, or S_{V_n'}.
enum class Observable { kXn, kSvnPrime };

inline const char* to_string(Observable o) { return o == Observable::kXn ? "xn" : "svnp"; }

inline Observable parse_observable(const std::string& s) {
    if (s == "xn") return Observable::kXn;
    if (s == "svnp") return Observable::kSvnPrime;
    throw ArgumentError("unknown observable \"" + s + "\" (expected xn or svnp)");
}

/// Pattern label with h for bit 0 and v for bit 1, first photon leftmost.
inline std::string pattern_label(std::size_t index, int n) {
    std::string s(static_cast<std::size_t>(n), 'h');
    for (int k = 0; k < n; ++k) {
        if ((index >> (n - 1 - k)) & 1U) s[static_cast<std::size_t>(k)] = 'v';
    }
    return s;
}

/// X-basis amplitudes of the phi-dressed chain (last photon unrotated), in
/// pattern order hh..h, hh..v, ..., vv..v. The n = 4 table uses 2^{-7/2}
/// normalization and the n = 3 table 1/(4 sqrt2).
inline CVector amplitudes(int n, double phi) {
    const Complex e = std::polar(1.0, phi);
    const Complex e2 = e * e;
    const Complex e3 = e2 * e;
    CVector a(Eigen::Index{1} << (n > 0 && n <= 4 ? n : 0));
    auto set = [&](std::initializer_list<const char*> keys, Complex value) {
        for (const char* k : keys) {
            std::size_t idx = 0;
            for (const char* c = k; *c; ++c) idx = (idx << 1) | (*c == 'v' ? 1U : 0U);
            a(static_cast<Eigen::Index>(idx)) = value;
        }
    };
    switch (n) {
        case 2: {
            const double c = std::pow(2.0, -1.5);
            set({"hh", "vv"}, c * (1.0 + e));
            set({"hv", "vh"}, c * (1.0 - e));
            break;
        }
        case 3: {
            const double c = 1.0 / (4.0 * std::sqrt(2.0));
            set({"hhh", "hvv"}, c * (1.0 + 2.0 * e - e2));
            set({"hhv", "hvh", "vhh", "vvv"}, c * (1.0 + e2));
            set({"vhv", "vvh"}, c * (1.0 - 2.0 * e - e2));
            break;
        }
        case 4: {
            const double c = std::pow(2.0, -3.5);
            set({"hhhh", "hhvv"}, c * (e3 - e2 + 3.0 * e + 1.0));
            set({"hhhv", "hhvh", "vhhh", "vhvv"}, c * (-e3 - e2 + e + 1.0));
            set({"hvhh", "hvvv"}, c * (-e3 + 3.0 * e2 + e + 1.0));
            set({"hvhv", "hvvh", "vvhh", "vvvv"}, c * (e3 - e2 - e + 1.0));
            set({"vhhv", "vhvh"}, c * (e3 + 3.0 * e2 - e + 1.0));
            set({"vvhv", "vvvh"}, c * (-e3 - e2 - 3.0 * e + 1.0));
            break;
        }
        default:
            throw ArgumentError("amplitude tables exist for n = 2, 3, 4 only");
    }
    return a;
}

/// <P> on the state.
inline double visibility(const QuantumState& s, const PauliString& observable) { return expectation(s, observable); }

/// X^{(x)n}.
inline PauliString x_string(int n) {
    if (n < 1) throw ArgumentError("Pauli string needs at least one letter");
    return PauliString(std::vector<Pauli>(static_cast<std::size_t>(n), Pauli::X));
}

/// Cluster generators in the last-photon-unrotated frame:
/// g_1 = X Z I.., g_k = ..Z X Z.., g_{n-1} = ..Z X X, g_n = ..I Z Z.
inline std::vector<PauliString> stabilizer_generators(int n) {
    if (n < 2) throw ArgumentError("stabilizer generators need n >= 2");
    std::vector<PauliString> gens;
    gens.reserve(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        std::vector<Pauli> l(static_cast<std::size_t>(n), Pauli::I);
        if (k == n - 1) {
            l[static_cast<std::size_t>(k - 1)] = Pauli::Z;
            l[static_cast<std::size_t>(k)] = Pauli::Z;
        } else {
            l[static_cast<std::size_t>(k)] = Pauli::X;
            if (k > 0) l[static_cast<std::size_t>(k - 1)] = Pauli::Z;
            // the neighbour of g_{n-1} is the unrotated last photon
            l[static_cast<std::size_t>(k + 1)] = k + 1 == n - 1 ? Pauli::X : Pauli::Z;
        }
        gens.emplace_back(std::move(l));
    }
    return gens;
}

/// S_{V_n'} = (X I)^{n/2-1} X X.
inline PauliString svn_prime(int n) {
    if (n < 2 || n % 2 != 0) throw ArgumentError("S_Vn' is defined for even n >= 2, got " + std::to_string(n));
    std::vector<Pauli> l;
    for (int k = 0; k < n / 2 - 1; ++k) {
        l.push_back(Pauli::X);
        l.push_back(Pauli::I);
    }
    l.push_back(Pauli::X);
    l.push_back(Pauli::X);
    return PauliString(std::move(l));
}

inline PauliString observable_string(Observable o, int n) { return o == Observable::kXn ? x_string(n) : svn_prime(n); }

/// Per-photon readout for an observable: X-type photons are read in p/m, the
/// last photon by arrival time (h/v after the final in-loop Hadamard).
struct MeasurementPlan {
    std::vector<Basis> bases;
    PauliString observable;
};

inline MeasurementPlan make_measurement_plan(Observable o, int n) {
    MeasurementPlan plan{std::vector<Basis>(static_cast<std::size_t>(n), Basis::kPM), observable_string(o, n)};
    plan.bases.back() = Basis::kHV;
    return plan;
}

/// +1/-1 weight of X-basis outcome pattern `index` in an {I, X} observable.
inline int population_sign(std::size_t index, const PauliString& observable) {
    for (Pauli p : observable.letters()) {
        if (p != Pauli::I && p != Pauli::X) throw ArgumentError("population weights need an observable over {I, X}");
    }
    const int parity = std::popcount(static_cast<std::uint64_t>(index) & observable.x_mask()) & 1;
    return observable.sign() * (parity ? -1 : 1);
}

/// Signed combination sum_k sign_k P_k / sum_k P_k.
inline double visibility_from_populations(const Eigen::VectorXd& pops, const PauliString& observable) {
    if (pops.size() != (Eigen::Index{1} << observable.size())) throw ArgumentError("population count does not match observable length");
    double num = 0.0;
    double den = 0.0;
    for (Eigen::Index k = 0; k < pops.size(); ++k) {
        num += population_sign(static_cast<std::size_t>(k), observable) * pops(k);
        den += pops(k);
    }
    if (!(den > 0.0)) throw EmptyDataError("populations sum to zero");
    return num / den;
}

/// Outcome distribution of the X-basis readout of a state.
inline Eigen::VectorXd x_basis_populations(const QuantumState& s) {
    QuantumState t = s;
    for (int q = 0; q < s.num_qubits(); ++q) t = apply_gate(t, SingleQubitGate::hadamard(), q);
    return t.populations();
}

/// Fusion noise with the source g2 folded into the pairwise visibility
/// (1 - g2/2); the returned model has g2 = 0.
inline NoiseModel effective_fusion_noise(const NoiseModel& noise) {
    noise.validate();
    if (noise.g2 == 0.0) return noise;
    const double f = 1.0 - noise.g2 / 2.0;
    if (noise.kind == NoiseKind::kDepolarizing) return NoiseModel::depolarizing(1.0 - f * (1.0 - noise.delta));
    return NoiseModel::distinguishing(two_photon_visibility_with_g2(noise.M, noise.g2));
}

/// Closed-form visibility of the n-photon chain:
///   xn:   cos(phi) for n = 2, (-1)^{n-1} cos^{n-3}(phi) sin^2(phi) otherwise
///   svnp: cos^{n/2}(phi)
/// scaled by M^{n-1} (xn) or M^{n/2} (svnp) for distinguishing noise, and by
/// (1-delta)^{n-1} for depolarizing noise.
inline double predicted_visibility(int n, double phi, Observable o, const NoiseModel& noise) {
    if (n < 2) throw ArgumentError("predicted visibility needs n >= 2");
    const NoiseModel eff = effective_fusion_noise(noise);
    const double c = std::cos(phi);
    const double s = std::sin(phi);
    double ideal = 0.0;
    double factor = 1.0;
    if (o == Observable::kXn) {
        ideal = n == 2 ? c : ((n % 2 == 0) ? -1.0 : 1.0) * std::pow(c, n - 3) * s * s;
        if (eff.kind == NoiseKind::kDistinguishing) factor = std::pow(eff.M, n - 1);
    } else {
        if (n % 2 != 0) throw ArgumentError("svnp needs an even photon count");
        ideal = std::pow(c, n / 2);
        if (eff.kind == NoiseKind::kDistinguishing) factor = std::pow(eff.M, n / 2);
    }
    if (eff.kind == NoiseKind::kDepolarizing) factor = std::pow(1.0 - eff.delta, n - 1);
    return factor * ideal;
}

struct PhaseScan {
    std::vector<double> phis;
    int n = 2;
    NoiseModel noise;
    Observable observable = Observable::kXn;
};

struct PhaseScanRow {
    double phi = 0.0;
    double simulated = 0.0;
    double predicted = 0.0;
};

/// `points` equally spaced values from lo to hi inclusive.
inline std::vector<double> linspace(double lo, double hi, int points) {
    if (points < 1) throw ArgumentError("grid needs at least one point");
    if (points == 1) return {lo};
    if (!(hi > lo)) throw ArgumentError("grid upper bound must exceed lower bound");
    std::vector<double> g(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i) g[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (points - 1);
    return g;
}

inline std::vector<PhaseScanRow> phase_scan(const PhaseScan& cfg, int threads = 1) {
    if (cfg.n < 2) throw ArgumentError("phase scan needs n >= 2");
    if (cfg.phis.empty()) throw ArgumentError("phase scan needs a non-empty grid");
    for (std::size_t i = 1; i < cfg.phis.size(); ++i) {
        if (!(cfg.phis[i] > cfg.phis[i - 1])) throw ArgumentError("phase grid must be strictly increasing");
    }
    const PauliString obs = observable_string(cfg.observable, cfg.n);
    const NoiseModel eff = effective_fusion_noise(cfg.noise);
    std::vector<PhaseScanRow> rows(cfg.phis.size());
    parallel_for(rows.size(), threads, [&](std::size_t i) {
        const double phi = cfg.phis[i];
        const ProtocolState ps = build_chain(cfg.n, phi, eff);
        rows[i] = {phi, visibility(ps.state, obs), predicted_visibility(cfg.n, phi, cfg.observable, cfg.noise)};
    });
    return rows;
}

enum class HomDelay { kZero, kFar };

/// Coincidence probability behind a balanced splitter: (1 - M)/2 at zero
/// delay, 1/2 without overlap.
inline double hom_dip(double M, HomDelay delay) {
    if (!(M >= 0.0 && M <= 1.0)) throw ArgumentError("M must lie in [0, 1]");
    return delay == HomDelay::kZero ? 0.5 * (1.0 - M) : 0.5;
}

/// M >= V_HOM + g2, clipped to [0, 1].
inline double m_lower_bound(double v_hom, double g2) { return std::clamp(v_hom + g2, 0.0, 1.0); }

}  // namespace loopcluster
