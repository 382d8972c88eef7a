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

// Loop-entangler protocol: photon injection, post-selected PBS fusion with
// noise, in-loop rotations, and closed-form reference states for n <= 4.

#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "loopcluster/errors.hpp"
#include "loopcluster/qcore.hpp"

namespace loopcluster {

enum class NoiseKind { kIdeal, kDistinguishing, kDepolarizing };

inline const char* to_string(NoiseKind k) {
    switch (k) {
        case NoiseKind::kIdeal: return "ideal";
        case NoiseKind::kDistinguishing: return "distinguishing";
        case NoiseKind::kDepolarizing: return "depolarizing";
    }
    return "?";
}

inline NoiseKind parse_noise_kind(const std::string& s) {
    if (s == "ideal") return NoiseKind::kIdeal;
    if (s == "distinguishing") return NoiseKind::kDistinguishing;
    if (s == "depolarizing") return NoiseKind::kDepolarizing;
    throw ArgumentError("unknown noise kind \"" + s + "\" (expected ideal, distinguishing or depolarizing)");
}

/// Fusion noise. M is the mean wave-packet overlap, delta the white-noise
/// strength, g2 the two-photon emission probability of the source.
struct NoiseModel {
    NoiseKind kind = NoiseKind::kIdeal;
    double M = 1.0;
    double delta = 0.0;
    double g2 = 0.0;

    static NoiseModel ideal() { return {}; }
    static NoiseModel distinguishing(double m, double g2 = 0.0) {
        NoiseModel n{NoiseKind::kDistinguishing, m, 0.0, g2};
        n.validate();
        return n;
    }
    static NoiseModel depolarizing(double delta, double g2 = 0.0) {
        NoiseModel n{NoiseKind::kDepolarizing, 1.0, delta, g2};
        n.validate();
        return n;
    }

    void validate() const {
        if (!(M >= 0.0 && M <= 1.0)) throw ArgumentError("M must lie in [0, 1]");
        if (!(delta >= 0.0 && delta <= 1.0)) throw ArgumentError("delta must lie in [0, 1]");
        if (!(g2 >= 0.0 && g2 < 1.0)) throw ArgumentError("g2 must lie in [0, 1)");
        switch (kind) {
            case NoiseKind::kIdeal:
                if (M != 1.0 || delta != 0.0 || g2 != 0.0) throw ArgumentError("ideal noise requires M=1, delta=0, g2=0");
                break;
            case NoiseKind::kDistinguishing:
                if (delta != 0.0) throw ArgumentError("distinguishing noise takes no delta");
                break;
            case NoiseKind::kDepolarizing:
                if (M != 1.0) throw ArgumentError("depolarizing noise takes no M");
                break;
        }
    }

    /// True when the fusion channel is the bare projector.
    bool channel_is_ideal() const {
        return kind == NoiseKind::kIdeal || (kind == NoiseKind::kDistinguishing && M == 1.0) ||
               (kind == NoiseKind::kDepolarizing && delta == 0.0);
    }
};

/// V_2 of a source with overlap M and multi-photon probability g2: (1 - g2/2) M.
inline double two_photon_visibility_with_g2(double M, double g2) {
    if (!(M >= 0.0 && M <= 1.0)) throw ArgumentError("M must lie in [0, 1]");
    if (!(g2 >= 0.0 && g2 < 1.0)) throw ArgumentError("g2 must lie in [0, 1)");
    return (1.0 - g2 / 2.0) * M;
}

/// Snapshot of the loop entangler. Qubit positions follow emission order.
struct ProtocolState {
    QuantumState state;
    int photons_emitted = 0;
    bool loop_occupied = false;
    bool fresh_pending = false;
    double cumulative_success_probability = 1.0;

    /// Position of the photon currently in the loop.
    int loop_position() const {
        if (!loop_occupied) throw ProtocolOrderError("loop is empty");
        return state.num_qubits() - (fresh_pending ? 2 : 1);
    }
};

namespace detail {

inline CMatrix fusion_even() {
    CMatrix e = CMatrix::Zero(4, 4);
    e(0, 0) = 1.0;
    e(3, 3) = 1.0;
    return e;
}

inline CMatrix fusion_odd() {
    CMatrix e = CMatrix::Zero(4, 4);
    e(0, 0) = 1.0;
    e(3, 3) = -1.0;
    return e;
}

inline const std::array<CMatrix, 4>& pauli_matrices() {
    static const std::array<CMatrix, 4> kP = [] {
        std::array<CMatrix, 4> p;
        p[0] = CMatrix::Identity(2, 2);
        p[1] = SingleQubitGate::pauli_x().matrix();
        p[2] = SingleQubitGate::pauli_y().matrix();
        p[3] = SingleQubitGate::pauli_z().matrix();
        return p;
    }();
    return kP;
}

/// rho -> (1-delta) rho + delta (I/4 (x) Tr_pair rho), written as a twirl over
/// the 16 two-qubit Pauli operators on `pair`.
inline QuantumState depolarize_pair(const QuantumState& s, double delta, std::array<int, 2> pair) {
    if (delta == 0.0) return s;
    const QuantumState m = s.to_mixed();
    CMatrix acc = CMatrix::Zero(m.density().rows(), m.density().cols());
    const auto& P = pauli_matrices();
    for (const CMatrix& a : P) {
        for (const CMatrix& b : P) {
            CMatrix ab(4, 4);
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j) ab.block(2 * i, 2 * j, 2, 2) = a(i, j) * b;
            acc += apply_operator(m, ab, pair).density();
        }
    }
    CMatrix rho = (1.0 - delta) * m.density() + (delta / 16.0) * acc;
    return QuantumState::from_density(std::move(rho), m.labels());
}

}  // namespace detail

/// Appends a fresh |p> photon. The first photon goes into the loop, which
/// succeeds with probability 1/2.
inline ProtocolState inject_photon(const ProtocolState& ps) {
    if (ps.fresh_pending) throw ProtocolOrderError("previous photon has not been fused yet");
    ProtocolState out = ps;
    const QuantumState fresh = QuantumState::product("p", {ps.photons_emitted});
    if (ps.photons_emitted == 0) {
        out.state = fresh;
        out.loop_occupied = true;
        out.cumulative_success_probability *= 0.5;
    } else {
        if (!ps.loop_occupied) throw ProtocolOrderError("loop already extracted");
        out.state = tensor(ps.state, fresh);
        out.fresh_pending = true;
    }
    out.photons_emitted += 1;
    return out;
}

/// Post-selected fusion of the loop photon with the fresh photon. Afterwards
/// the fresh photon is the loop photon and the old one has exited.
inline ProtocolState fuse(const ProtocolState& ps, const NoiseModel& noise) {
    if (!ps.loop_occupied) throw ProtocolOrderError("fuse with empty loop");
    if (!ps.fresh_pending) throw ProtocolOrderError("fuse without a fresh photon");
    noise.validate();
    const int loop = ps.loop_position();
    const std::array<int, 2> pair{loop, loop + 1};

    BranchResult r{ps.state, 0.0};
    if (noise.kind == NoiseKind::kDistinguishing && noise.M < 1.0) {
        const std::array<CMatrix, 2> kraus{std::sqrt((1.0 + noise.M) / 2.0) * detail::fusion_even(),
                                           std::sqrt((1.0 - noise.M) / 2.0) * detail::fusion_odd()};
        r = apply_kraus(ps.state, kraus, pair);
    } else {
        const std::array<CMatrix, 1> kraus{detail::fusion_even()};
        r = apply_kraus(ps.state, kraus, pair);
    }
    if (noise.kind == NoiseKind::kDepolarizing) r.state = detail::depolarize_pair(r.state, noise.delta, pair);

    ProtocolState out = ps;
    out.state = std::move(r.state);
    out.fresh_pending = false;
    out.cumulative_success_probability *= r.probability;
    return out;
}

/// EPC2 phase then EPC3 Hadamard on the loop photon: H Z_phi.
inline ProtocolState rotate_loop_photon(const ProtocolState& ps, double phi) {
    if (!ps.loop_occupied) throw ProtocolOrderError("rotate with empty loop");
    ProtocolState out = ps;
    const int q = ps.loop_position();
    out.state = apply_gate(ps.state, SingleQubitGate::hadamard() * SingleQubitGate::phase_z(phi), q);
    return out;
}

/// Last in-loop pass: Z_phi always, the Hadamard only on request. The loop is
/// empty afterwards.
inline ProtocolState extract_last_photon(const ProtocolState& ps, double phi, bool apply_final_rotation) {
    if (!ps.loop_occupied) throw ProtocolOrderError("nothing to extract");
    if (ps.fresh_pending) throw ProtocolOrderError("fresh photon still pending");
    ProtocolState out = ps;
    const int q = ps.loop_position();
    SingleQubitGate g = SingleQubitGate::phase_z(phi);
    if (apply_final_rotation) g = SingleQubitGate::hadamard() * g;
    out.state = apply_gate(ps.state, g, q);
    out.loop_occupied = false;
    return out;
}

struct BuildOptions {
    /// Apply the final EPC3 Hadamard to the last photon (graph-state form).
    bool apply_final_rotation = false;
};

/// n-photon chain at loop phase phi.
inline ProtocolState build_chain(int n, double phi, const NoiseModel& noise, BuildOptions opts = {}) {
    if (n < 2) throw ArgumentError("chain needs at least 2 photons");
    noise.validate();
    const int cap = noise.channel_is_ideal() ? kMaxPureQubits : kMaxMixedQubits;
    if (n > cap) {
        throw CapacityError("chain of " + std::to_string(n) + " photons exceeds the " + std::to_string(cap) +
                            "-qubit limit for " + to_string(noise.kind) + " noise");
    }
    ProtocolState ps = inject_photon(ProtocolState{});
    for (int k = 1; k < n; ++k) {
        if (k > 1) ps = rotate_loop_photon(ps, phi);
        ps = inject_photon(ps);
        ps = fuse(ps, noise);
    }
    return extract_last_photon(ps, phi, opts.apply_final_rotation);
}

/// Closed-form phi-dressed states for n = 2, 3, 4 (last photon unrotated):
///   n=2: (|hh> + e|vv>)/sqrt2
///   n=3: (|p_phi hh> + e|m_phi vv>)/2
///   n=4: 2^{-3/2} (|p_phi hhh> + e|p_phi hvv> + e|m_phi vhh> - e^2|m_phi vvv>)
/// with e = exp(i phi), p_phi = h + e v, m_phi = h - e v.
inline QuantumState reference_state(int n, double phi, BuildOptions opts = {}) {
    const Complex e = std::polar(1.0, phi);
    CVector psi = CVector::Zero(Eigen::Index{1} << n);
    switch (n) {
        case 2:
            psi(0b00) = 1.0;
            psi(0b11) = e;
            break;
        case 3:
            // first qubit carries p_phi or m_phi
            psi(0b000) = 1.0;
            psi(0b100) = e;
            psi(0b011) = e;
            psi(0b111) = -e * e;
            break;
        case 4: {
            auto add = [&](int tail, Complex c, bool plus) {
                psi(tail) += c;
                psi(0b1000 | tail) += c * (plus ? e : -e);
            };
            add(0b000, 1.0, true);
            add(0b011, e, true);
            add(0b100, e, false);
            add(0b111, -e * e, false);
            break;
        }
        default:
            throw ArgumentError("reference states exist for n = 2, 3, 4 only");
    }
    QuantumState s = QuantumState::from_amplitudes(std::move(psi));
    if (opts.apply_final_rotation) s = apply_gate(s, SingleQubitGate::hadamard(), n - 1);
    return s;
}

}  // namespace loopcluster
