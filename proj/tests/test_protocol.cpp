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

#include <gtest/gtest.h>

#include <random>

#include "loopcluster/protocol.hpp"
#include "oracles.hpp"

namespace loopcluster {
namespace {

QuantumState kets(const std::vector<std::pair<Complex, std::string>>& terms) {
    CVector v;
    for (const auto& [c, k] : terms) {
        const CVector t = c * QuantumState::product(k).amplitudes();
        if (v.size() == 0) v = t;
        else v += t;
    }
    return QuantumState::from_amplitudes(v);
}

ProtocolState two_photons() { return inject_photon(inject_photon(ProtocolState{})); }

TEST(Inject, FirstPhotonEntersLoop) {
    const ProtocolState ps = inject_photon(ProtocolState{});
    EXPECT_EQ(ps.state.num_qubits(), 1);
    EXPECT_TRUE(ps.loop_occupied);
    EXPECT_DOUBLE_EQ(ps.cumulative_success_probability, 0.5);
    EXPECT_NEAR(fidelity(ps.state, QuantumState::product("p")), 1.0, 1e-15);
}

TEST(Fuse, IdealGivesPhiPlus) {
    const ProtocolState ps = fuse(two_photons(), NoiseModel::ideal());
    EXPECT_NEAR(fidelity(ps.state, kets({{1.0, "hh"}, {1.0, "vv"}})), 1.0, 1e-15);
    EXPECT_DOUBLE_EQ(ps.cumulative_success_probability, 0.25);
    EXPECT_TRUE(ps.state.is_pure());
}

TEST(Fuse, DistinguishingVisibilityEqualsM) {
    for (double m : {0.0, 0.3, 0.77, 1.0}) {
        const ProtocolState ps = fuse(two_photons(), NoiseModel::distinguishing(m));
        EXPECT_NEAR(expectation(ps.state, PauliString::parse("XX")), m, 1e-14);
        EXPECT_NEAR(ps.cumulative_success_probability, 0.25, 1e-15);
    }
}

TEST(Fuse, FullyDecohered) {
    const ProtocolState ps = fuse(two_photons(), NoiseModel::distinguishing(0.0));
    CMatrix expect = CMatrix::Zero(4, 4);
    expect(0, 0) = expect(3, 3) = 0.5;
    EXPECT_LT((ps.state.density() - expect).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Fuse, DepolarizingVisibility) {
    for (double d : {0.0, 0.07, 0.24, 1.0}) {
        const ProtocolState ps = fuse(two_photons(), NoiseModel::depolarizing(d));
        EXPECT_NEAR(expectation(ps.state, PauliString::parse("XX")), 1.0 - d, 1e-14);
    }
}

TEST(Fuse, OrderErrors) {
    EXPECT_THROW(fuse(ProtocolState{}, NoiseModel::ideal()), ProtocolOrderError);
    EXPECT_THROW(fuse(inject_photon(ProtocolState{}), NoiseModel::ideal()), ProtocolOrderError);
    EXPECT_THROW(inject_photon(two_photons()), ProtocolOrderError);
    EXPECT_THROW(rotate_loop_photon(ProtocolState{}, 0.0), ProtocolOrderError);
}

TEST(Rotate, TwoPhotonCluster) {
    ProtocolState ps = fuse(two_photons(), NoiseModel::ideal());
    ps = rotate_loop_photon(ps, 0.0);
    EXPECT_NEAR(fidelity(ps.state, kets({{1.0, "hp"}, {1.0, "vm"}})), 1.0, 1e-15);
}

TEST(Rotate, ThreePhotonGhz) {
    const ProtocolState ps = build_chain(3, 0.0, NoiseModel::ideal(), {true});
    EXPECT_NEAR(fidelity(ps.state, kets({{1.0, "php"}, {1.0, "mvm"}})), 1.0, 1e-14);
}

TEST(Rotate, PiPhaseOnPlus) {
    const ProtocolState ps = rotate_loop_photon(inject_photon(ProtocolState{}), kPi);
    EXPECT_NEAR(fidelity(ps.state, QuantumState::product("v")), 1.0, 1e-15);
}

TEST(BuildChain, FourPhotonLinearCluster) {
    const ProtocolState ps = build_chain(4, 0.0, NoiseModel::ideal(), {true});
    const QuantumState lc = kets({{1.0, "phhp"}, {1.0, "phvm"}, {1.0, "mvhp"}, {-1.0, "mvvm"}});
    EXPECT_GT(fidelity(ps.state, lc), 1.0 - 1e-10);
}

TEST(BuildChain, PhiDressedFourPhotonState) {
    for (double phi : {0.3, 0.7, 2.1}) {
        const ProtocolState ps = build_chain(4, phi, NoiseModel::ideal());
        EXPECT_GT(fidelity(ps.state, reference_state(4, phi)), 1.0 - 1e-10);
    }
}

TEST(BuildChain, TwoPhotonHalfOverlapAgainstChannelFormula) {
    const ProtocolState ps = build_chain(2, 0.0, NoiseModel::distinguishing(0.5));
    const oracle::Mat rho = oracle::chain(2, 0.0, 0.5);
    EXPECT_NEAR(expectation(ps.state, PauliString::parse("XX")), 0.5, 1e-14);
    EXPECT_NEAR((rho * oracle::pauli_matrix("XX")).trace().real(), 0.5, 1e-14);
}

TEST(BuildChain, NoisyChainsMatchDenseOracle) {
    for (int n = 2; n <= 5; ++n) {
        for (double phi : {0.0, 0.9}) {
            const CMatrix a = build_chain(n, phi, NoiseModel::distinguishing(0.8)).state.density();
            EXPECT_LT((a - oracle::chain(n, phi, 0.8)).cwiseAbs().maxCoeff(), 1e-12) << n;
            const CMatrix b = build_chain(n, phi, NoiseModel::depolarizing(0.15)).state.density();
            EXPECT_LT((b - oracle::chain(n, phi, 1.0, 0.15)).cwiseAbs().maxCoeff(), 1e-12) << n;
        }
    }
}

TEST(BuildChain, CapacityAndArguments) {
    EXPECT_THROW(build_chain(1, 0.0, NoiseModel::ideal()), ArgumentError);
    EXPECT_THROW(build_chain(12, 0.0, NoiseModel::distinguishing(0.9)), CapacityError);
    EXPECT_THROW(build_chain(25, 0.0, NoiseModel::ideal()), CapacityError);
}

TEST(ReferenceState, Examples) {
    EXPECT_NEAR(fidelity(reference_state(2, 0.0), kets({{1.0, "hh"}, {1.0, "vv"}})), 1.0, 1e-15);
    // (|(h+v) h h> + |(h-v) v v>)/2
    EXPECT_NEAR(fidelity(reference_state(3, 0.0), kets({{1.0, "hhh"}, {1.0, "vhh"}, {1.0, "hvv"}, {-1.0, "vvv"}})), 1.0, 1e-15);
    const QuantumState cl4 = kets({{1.0, "hhhh"}, {1.0, "vhhh"}, {1.0, "hhvv"}, {1.0, "vhvv"},
                                   {1.0, "hvhh"}, {-1.0, "vvhh"}, {-1.0, "hvvv"}, {1.0, "vvvv"}});
    EXPECT_NEAR(fidelity(reference_state(4, 0.0), cl4), 1.0, 1e-15);
    EXPECT_THROW(reference_state(5, 0.0), ArgumentError);
}

TEST(G2, Visibility) {
    EXPECT_DOUBLE_EQ(two_photon_visibility_with_g2(1.0, 0.0), 1.0);
    EXPECT_DOUBLE_EQ(two_photon_visibility_with_g2(0.77, 0.0), 0.77);
    EXPECT_NEAR(two_photon_visibility_with_g2(0.9, 0.1), 0.855, 1e-15);
    EXPECT_THROW(two_photon_visibility_with_g2(1.1, 0.0), ArgumentError);
    EXPECT_THROW(two_photon_visibility_with_g2(0.5, 1.0), ArgumentError);
}

TEST(NoiseModel, Validation) {
    EXPECT_THROW(NoiseModel::distinguishing(1.2), ArgumentError);
    EXPECT_THROW(NoiseModel::depolarizing(-0.1), ArgumentError);
    NoiseModel bad{NoiseKind::kIdeal, 0.9, 0.0, 0.0};
    EXPECT_THROW(bad.validate(), ArgumentError);
    EXPECT_EQ(parse_noise_kind("depolarizing"), NoiseKind::kDepolarizing);
    EXPECT_THROW(parse_noise_kind("thermal"), ArgumentError);
}

TEST(Invariants, FusionTraceAndNormalization) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0, 1);
    for (int trial = 0; trial < 100; ++trial) {
        ProtocolState ps = inject_photon(ProtocolState{});
        ps.state = apply_gate(ps.state, SingleQubitGate::phase_z(6 * u(rng)) * SingleQubitGate::hadamard(), 0);
        ps = inject_photon(ps);
        const double before = ps.cumulative_success_probability;
        ps = fuse(ps, NoiseModel::distinguishing(u(rng)));
        const double branch = ps.cumulative_success_probability / before;
        ASSERT_LE(branch, 1.0 + 1e-12);
        ASSERT_NEAR(ps.state.trace(), 1.0, 1e-12);
    }
}

TEST(Invariants, PostSelectionProbability) {
    for (int n = 2; n <= 10; ++n) {
        const ProtocolState ps = build_chain(n, 0.4, NoiseModel::ideal());
        EXPECT_NEAR(ps.cumulative_success_probability, std::pow(0.5, n - 1) * 0.5, 1e-15);
    }
}

TEST(Invariants, SimulatorMatchesClosedForm) {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> u(-kPi, kPi);
    for (int trial = 0; trial < 50; ++trial) {
        const double phi = u(rng);
        for (int n = 2; n <= 4; ++n) {
            ASSERT_GT(fidelity(build_chain(n, phi, NoiseModel::ideal()).state, reference_state(n, phi)), 1.0 - 1e-10);
        }
    }
}

TEST(Invariants, VisibilityMonotoneInOverlap) {
    double last = -1.0;
    for (int i = 0; i <= 100; ++i) {
        const double m = i / 100.0;
        const double v = expectation(fuse(two_photons(), NoiseModel::distinguishing(m)).state, PauliString::parse("XX"));
        ASSERT_GE(v, last - 1e-15);
        last = v;
    }
}

TEST(Invariants, OddFusionOperatorStructure) {
    const CMatrix e1 = detail::fusion_odd();
    for (int b = 0; b < 4; ++b) {
        CVector basis = CVector::Zero(4);
        basis(b) = 1.0;
        const CVector out = e1 * basis;
        if (b == 1 || b == 2) EXPECT_LT(out.norm(), 1e-15);
        else EXPECT_NEAR(out(b).real(), b == 0 ? 1.0 : -1.0, 1e-15);
    }
    // Unnormalized form (I Z + Z I), halved.
    EXPECT_LT((e1 - oracle::odd_operator()).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_LT((detail::fusion_even() - oracle::even_projector()).cwiseAbs().maxCoeff(), 1e-15);
}

}  // namespace
}  // namespace loopcluster
