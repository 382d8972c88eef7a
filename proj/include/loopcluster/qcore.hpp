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

// Dense few-qubit linear algebra: pure/mixed states over polarization qubits,
// Pauli strings with exact phase tracking, and the handful of kernels the
// loop simulator needs (local operators, Kraus channels, projections, partial
// traces, Pauli expectation values).
//
// Conventions:
//   * |h> = |0>, |v> = |1>, |p> = (|h>+|v>)/sqrt2, |m> = (|h>-|v>)/sqrt2.
//   * Position 0 is the most significant bit of the basis index.
//   * Labels carry photon emission order (label 0 = first emitted photon).

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "loopcluster/errors.hpp"

namespace loopcluster {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;

inline constexpr double kAlgebraicTol = 1e-12;
inline constexpr double kAccumulatedTol = 1e-10;
inline constexpr int kMaxPureQubits = 24;
inline constexpr int kMaxMixedQubits = 11;
inline constexpr double kPi = 3.14159265358979323846;

/// Two-outcome measurement bases available at the analysis stage.
enum class Basis { kHV, kPM, kY };

namespace detail {

inline std::size_t dim_of(int num_qubits) { return std::size_t{1} << num_qubits; }

inline int shift_of(int num_qubits, int position) { return num_qubits - 1 - position; }

/// Eigenvector for outcome +1/-1 of the given basis.
inline Eigen::Vector2cd basis_vector(Basis basis, int outcome) {
    if (outcome != 1 && outcome != -1) {
        throw ArgumentError("measurement outcome must be +1 or -1");
    }
    const double s = 1.0 / std::sqrt(2.0);
    Eigen::Vector2cd v;
    switch (basis) {
        case Basis::kHV:
            v = outcome == 1 ? Eigen::Vector2cd(1.0, 0.0) : Eigen::Vector2cd(0.0, 1.0);
            break;
        case Basis::kPM:
            v = Eigen::Vector2cd(s, outcome * s);
            break;
        case Basis::kY:
            v = Eigen::Vector2cd(s, Complex(0.0, outcome * s));
            break;
    }
    return v;
}

/// Applies a (2^k x 2^k) operator to the listed positions of a state vector
/// stored in `data` (length 2^n, stride `stride`).  Bit order inside the
/// operator follows the order of `positions` (first listed = most significant).
inline void apply_local(Complex* data, std::size_t stride, int n, const CMatrix& op,
                        std::span<const int> positions) {
    const int k = static_cast<int>(positions.size());
    const std::size_t local_dim = std::size_t{1} << k;
    std::array<std::size_t, 8> offsets{};
    std::size_t mask = 0;
    for (std::size_t a = 0; a < local_dim; ++a) {
        std::size_t off = 0;
        for (int j = 0; j < k; ++j) {
            if ((a >> (k - 1 - j)) & 1U) off |= std::size_t{1} << shift_of(n, positions[j]);
        }
        offsets[a] = off;
    }
    for (int j = 0; j < k; ++j) mask |= std::size_t{1} << shift_of(n, positions[j]);

    std::array<Complex, 8> in{};
    const std::size_t dim = dim_of(n);
    for (std::size_t base = 0; base < dim; ++base) {
        if (base & mask) continue;
        for (std::size_t a = 0; a < local_dim; ++a) in[a] = data[(base | offsets[a]) * stride];
        for (std::size_t r = 0; r < local_dim; ++r) {
            Complex acc = 0.0;
            for (std::size_t c = 0; c < local_dim; ++c) acc += op(r, c) * in[c];
            data[(base | offsets[r]) * stride] = acc;
        }
    }
}

inline void check_positions(int n, std::span<const int> positions) {
    if (positions.empty() || positions.size() > 3) {
        throw ArgumentError("local operators act on 1 to 3 qubits");
    }
    for (std::size_t i = 0; i < positions.size(); ++i) {
        if (positions[i] < 0 || positions[i] >= n) {
            throw ArgumentError("qubit index " + std::to_string(positions[i]) + " out of range for " +
                                std::to_string(n) + " qubits");
        }
        for (std::size_t j = 0; j < i; ++j) {
            if (positions[i] == positions[j]) throw ArgumentError("repeated qubit index");
        }
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// SingleQubitGate

class SingleQubitGate {
   public:
    SingleQubitGate() : m_(Eigen::Matrix2cd::Identity()) {}

    /// Throws ArgumentError unless `m` is unitary within 1e-12.
    static SingleQubitGate from_matrix(const Eigen::Matrix2cd& m) {
        if (((m.adjoint() * m) - Eigen::Matrix2cd::Identity()).cwiseAbs().maxCoeff() > kAlgebraicTol) {
            throw ArgumentError("gate matrix is not unitary");
        }
        return SingleQubitGate(m);
    }

    static SingleQubitGate identity() { return {}; }
    static SingleQubitGate hadamard() {
        const double s = 1.0 / std::sqrt(2.0);
        Eigen::Matrix2cd m;
        m << s, s, s, -s;
        return SingleQubitGate(m);
    }
    static SingleQubitGate pauli_x() {
        Eigen::Matrix2cd m;
        m << 0, 1, 1, 0;
        return SingleQubitGate(m);
    }
    static SingleQubitGate pauli_y() {
        Eigen::Matrix2cd m;
        m << 0, Complex(0, -1), Complex(0, 1), 0;
        return SingleQubitGate(m);
    }
    static SingleQubitGate pauli_z() {
        Eigen::Matrix2cd m;
        m << 1, 0, 0, -1;
        return SingleQubitGate(m);
    }
    /// Birefringent phase I cos(phi/2) - i Z sin(phi/2) = diag(e^{-i phi/2}, e^{i phi/2}).
    static SingleQubitGate phase_z(double phi) {
        Eigen::Matrix2cd m = Eigen::Matrix2cd::Zero();
        m(0, 0) = std::polar(1.0, -phi / 2);
        m(1, 1) = std::polar(1.0, phi / 2);
        return SingleQubitGate(m);
    }

    const Eigen::Matrix2cd& matrix() const { return m_; }
    SingleQubitGate dagger() const { return SingleQubitGate(m_.adjoint()); }

    /// Composition: (a * b) applies b first.
    friend SingleQubitGate operator*(const SingleQubitGate& a, const SingleQubitGate& b) {
        return SingleQubitGate(a.m_ * b.m_);
    }

   private:
    explicit SingleQubitGate(const Eigen::Matrix2cd& m) : m_(m) {}
    Eigen::Matrix2cd m_;
};

// ---------------------------------------------------------------------------
// PauliString

enum class Pauli : std::uint8_t { I = 0, X = 1, Y = 2, Z = 3 };

/// Tensor product of Pauli letters with an overall phase i^k, k in {0,1,2,3}.
/// The phase is tracked exactly under multiplication.
class PauliString {
   public:
    PauliString() = default;
    explicit PauliString(std::vector<Pauli> letters, int phase = 0)
        : letters_(std::move(letters)), phase_(((phase % 4) + 4) % 4) {}

    static PauliString identity(int n) { return PauliString(std::vector<Pauli>(n, Pauli::I)); }

    /// Parses e.g. "XIXX", "+ZZ", "-YY", "iXZ", "-iZ".
    static PauliString parse(std::string_view text) {
        int phase = 0;
        std::size_t i = 0;
        if (i < text.size() && (text[i] == '+' || text[i] == '-')) {
            if (text[i] == '-') phase = 2;
            ++i;
        }
        if (i < text.size() && text[i] == 'i') {
            phase += 1;
            ++i;
        }
        std::vector<Pauli> letters;
        for (; i < text.size(); ++i) {
            switch (text[i]) {
                case 'I': letters.push_back(Pauli::I); break;
                case 'X': letters.push_back(Pauli::X); break;
                case 'Y': letters.push_back(Pauli::Y); break;
                case 'Z': letters.push_back(Pauli::Z); break;
                default:
                    throw ArgumentError("invalid Pauli letter '" + std::string(1, text[i]) + "' in \"" +
                                        std::string(text) + "\"");
            }
        }
        if (letters.empty()) throw ArgumentError("empty Pauli string");
        return PauliString(std::move(letters), phase);
    }

    int size() const { return static_cast<int>(letters_.size()); }
    const std::vector<Pauli>& letters() const { return letters_; }
    Pauli operator[](int k) const { return letters_.at(static_cast<std::size_t>(k)); }

    /// Phase exponent k of i^k.
    int phase() const { return phase_; }
    Complex coefficient() const {
        static constexpr std::array<Complex, 4> kPhases{Complex(1, 0), Complex(0, 1), Complex(-1, 0),
                                                        Complex(0, -1)};
        return kPhases[static_cast<std::size_t>(phase_)];
    }
    bool is_hermitian() const { return phase_ % 2 == 0; }
    /// +1 or -1 for Hermitian strings.
    int sign() const {
        if (!is_hermitian()) throw ArgumentError("Pauli string has an imaginary phase");
        return phase_ == 0 ? 1 : -1;
    }

    std::string to_string() const {
        static constexpr std::array<const char*, 4> kPrefix{"+", "+i", "-", "-i"};
        static constexpr std::array<char, 4> kLetter{'I', 'X', 'Y', 'Z'};
        std::string s = kPrefix[static_cast<std::size_t>(phase_)];
        for (Pauli p : letters_) s.push_back(kLetter[static_cast<std::size_t>(p)]);
        return s;
    }

    friend bool operator==(const PauliString& a, const PauliString& b) {
        return a.phase_ == b.phase_ && a.letters_ == b.letters_;
    }

    friend PauliString operator*(const PauliString& a, const PauliString& b) {
        if (a.size() != b.size()) throw ArgumentError("Pauli string lengths differ");
        // Single-letter products: X*Y = iZ, Y*Z = iX, Z*X = iY, reversed order gives -i.
        int phase = a.phase_ + b.phase_;
        std::vector<Pauli> out(a.letters_.size());
        for (std::size_t k = 0; k < out.size(); ++k) {
            const int x = static_cast<int>(a.letters_[k]);
            const int y = static_cast<int>(b.letters_[k]);
            if (x == 0 || y == 0 || x == y) {
                out[k] = static_cast<Pauli>(x == 0 ? y : (y == 0 ? x : 0));
                continue;
            }
            const int z = 6 - x - y;
            out[k] = static_cast<Pauli>(z);
            phase += ((y - x + 3) % 3 == 1) ? 1 : 3;
        }
        return PauliString(std::move(out), phase);
    }

    /// Bit masks (position 0 = most significant) of letters with an X or Z component.
    std::uint64_t x_mask() const { return mask_where([](Pauli p) { return p == Pauli::X || p == Pauli::Y; }); }
    std::uint64_t z_mask() const { return mask_where([](Pauli p) { return p == Pauli::Z || p == Pauli::Y; }); }

   private:
    template <typename Pred>
    std::uint64_t mask_where(Pred pred) const {
        std::uint64_t m = 0;
        const int n = size();
        for (int k = 0; k < n; ++k) {
            if (pred(letters_[static_cast<std::size_t>(k)])) m |= std::uint64_t{1} << (n - 1 - k);
        }
        return m;
    }

    std::vector<Pauli> letters_;
    int phase_ = 0;
};

// ---------------------------------------------------------------------------
// QuantumState

/// Pure (amplitude vector) or mixed (density matrix) state of n qubits.
/// Values are immutable from the caller's perspective; all operations return
/// new states.  Pure states stay pure until a non-unitary channel or a
/// partial trace forces the matrix form.
class QuantumState {
   public:
    /// The zero-qubit state (scalar 1).
    QuantumState() : data_(CVector(CVector::Ones(1))) {}

    /// Normalizes `amplitudes`; throws if its length is not a power of two or it is zero.
    static QuantumState from_amplitudes(CVector amplitudes, std::vector<int> labels = {}) {
        const int n = qubits_for_dim(amplitudes.size());
        if (n > kMaxPureQubits) throw CapacityError("pure state exceeds " + std::to_string(kMaxPureQubits) + " qubits");
        const double norm = amplitudes.norm();
        if (!(norm > kAlgebraicTol)) throw ArgumentError("state vector has zero norm");
        amplitudes /= norm;
        return QuantumState(std::move(amplitudes), resolve_labels(n, std::move(labels)));
    }

    /// Checks Hermiticity, normalizes the trace to one.
    static QuantumState from_density(CMatrix rho, std::vector<int> labels = {}) {
        if (rho.rows() != rho.cols()) throw ArgumentError("density matrix must be square");
        const int n = qubits_for_dim(rho.rows());
        if (n > kMaxMixedQubits) throw CapacityError("density matrix exceeds " + std::to_string(kMaxMixedQubits) + " qubits");
        const double scale = std::max(1.0, rho.cwiseAbs().maxCoeff());
        if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > kAccumulatedTol * scale) {
            throw ArgumentError("density matrix is not Hermitian");
        }
        const double tr = rho.trace().real();
        if (!(tr > kAlgebraicTol)) throw ArgumentError("density matrix has non-positive trace");
        rho = ((rho + rho.adjoint()) / (2.0 * tr)).eval();
        return QuantumState(std::move(rho), resolve_labels(n, std::move(labels)));
    }

    /// Product state from a string over {h, v, p, m, +, -} where + and - are the y eigenstates.
    static QuantumState product(std::string_view kets, std::vector<int> labels = {}) {
        if (kets.empty()) return QuantumState();
        CVector psi = CVector::Ones(1);
        const double s = 1.0 / std::sqrt(2.0);
        for (char c : kets) {
            Eigen::Vector2cd q;
            switch (c) {
                case 'h': q << 1, 0; break;
                case 'v': q << 0, 1; break;
                case 'p': q << s, s; break;
                case 'm': q << s, -s; break;
                case '+': q << s, Complex(0, s); break;
                case '-': q << s, Complex(0, -s); break;
                default: throw ArgumentError("unknown single-qubit ket '" + std::string(1, c) + "'");
            }
            CVector next(psi.size() * 2);
            for (Eigen::Index i = 0; i < psi.size(); ++i) {
                next(2 * i) = psi(i) * q(0);
                next(2 * i + 1) = psi(i) * q(1);
            }
            psi = std::move(next);
        }
        return from_amplitudes(std::move(psi), std::move(labels));
    }

    static QuantumState maximally_mixed(int num_qubits) {
        const auto d = static_cast<Eigen::Index>(detail::dim_of(num_qubits));
        return from_density(CMatrix::Identity(d, d));
    }

    int num_qubits() const { return static_cast<int>(labels_.size()); }
    std::size_t dim() const { return detail::dim_of(num_qubits()); }
    bool is_pure() const { return std::holds_alternative<CVector>(data_); }
    const std::vector<int>& labels() const { return labels_; }

    /// Position of the qubit carrying `label`; throws if absent.
    int position_of(int label) const {
        auto it = std::find(labels_.begin(), labels_.end(), label);
        if (it == labels_.end()) throw ArgumentError("no qubit labelled " + std::to_string(label));
        return static_cast<int>(it - labels_.begin());
    }

    /// Amplitudes of a pure state; throws ArgumentError for mixed states.
    const CVector& amplitudes() const {
        if (!is_pure()) throw ArgumentError("state is mixed; no amplitude vector");
        return std::get<CVector>(data_);
    }

    /// Density matrix (computed on demand for pure states).
    CMatrix density() const {
        if (is_pure()) {
            const auto& psi = std::get<CVector>(data_);
            return psi * psi.adjoint();
        }
        return std::get<CMatrix>(data_);
    }

    /// Matrix form of the same state.
    QuantumState to_mixed() const {
        if (!is_pure()) return *this;
        if (num_qubits() > kMaxMixedQubits) throw CapacityError("cannot promote state beyond " + std::to_string(kMaxMixedQubits) + " qubits to matrix form");
        return QuantumState(density(), labels_);
    }

    QuantumState with_labels(std::vector<int> labels) const {
        QuantumState out = *this;
        out.labels_ = resolve_labels(num_qubits(), std::move(labels));
        return out;
    }

    /// Diagonal of the density matrix in the computational basis.
    Eigen::VectorXd populations() const {
        if (is_pure()) return std::get<CVector>(data_).cwiseAbs2();
        return std::get<CMatrix>(data_).diagonal().real();
    }

    double trace() const {
        if (is_pure()) return std::get<CVector>(data_).squaredNorm();
        return std::get<CMatrix>(data_).trace().real();
    }

    double purity() const {
        if (is_pure()) return 1.0;
        const auto& rho = std::get<CMatrix>(data_);
        return (rho * rho).trace().real();
    }

    // Internal constructors used by the free functions below.
    QuantumState(CVector psi, std::vector<int> labels) : data_(std::move(psi)), labels_(std::move(labels)) {}
    QuantumState(CMatrix rho, std::vector<int> labels) : data_(std::move(rho)), labels_(std::move(labels)) {}

   private:
    static int qubits_for_dim(Eigen::Index dim) {
        if (dim < 1 || (dim & (dim - 1)) != 0) throw ArgumentError("dimension is not a power of two");
        int n = 0;
        while ((Eigen::Index{1} << n) < dim) ++n;
        return n;
    }

    static std::vector<int> resolve_labels(int n, std::vector<int> labels) {
        if (labels.empty()) {
            labels.resize(static_cast<std::size_t>(n));
            std::iota(labels.begin(), labels.end(), 0);
        }
        if (static_cast<int>(labels.size()) != n) throw ArgumentError("label count does not match qubit count");
        std::vector<int> sorted = labels;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) throw ArgumentError("duplicate qubit labels");
        return labels;
    }

    std::variant<CVector, CMatrix> data_;
    std::vector<int> labels_;
};

// ---------------------------------------------------------------------------
// Operations

/// Tensor product a (x) b.  Labels are concatenated; if b's labels collide with
/// a's they are shifted to follow the largest label of a.
inline QuantumState tensor(const QuantumState& a, const QuantumState& b) {
    const int n = a.num_qubits() + b.num_qubits();
    const bool pure = a.is_pure() && b.is_pure();
    if (pure && n > kMaxPureQubits) throw CapacityError("tensor product exceeds " + std::to_string(kMaxPureQubits) + " qubits");
    if (!pure && n > kMaxMixedQubits) throw CapacityError("mixed tensor product exceeds " + std::to_string(kMaxMixedQubits) + " qubits");

    std::vector<int> labels = a.labels();
    std::vector<int> tail = b.labels();
    const bool collide = std::any_of(tail.begin(), tail.end(), [&](int l) {
        return std::find(labels.begin(), labels.end(), l) != labels.end();
    });
    if (collide && !tail.empty()) {
        const int base = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
        const int lo = *std::min_element(tail.begin(), tail.end());
        for (int& l : tail) l = l - lo + base;
    }
    labels.insert(labels.end(), tail.begin(), tail.end());

    if (pure) {
        const auto& x = a.amplitudes();
        const auto& y = b.amplitudes();
        CVector out(x.size() * y.size());
        for (Eigen::Index i = 0; i < x.size(); ++i) out.segment(i * y.size(), y.size()) = x(i) * y;
        return QuantumState(std::move(out), std::move(labels));
    }
    const CMatrix x = a.density();
    const CMatrix y = b.density();
    CMatrix out(x.rows() * y.rows(), x.cols() * y.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            out.block(i * y.rows(), j * y.cols(), y.rows(), y.cols()) = x(i, j) * y;
        }
    }
    return QuantumState(std::move(out), std::move(labels));
}

/// Applies `op` (2^k x 2^k, k = positions.size()) without renormalizing.
/// For mixed states computes op rho op^dagger.
inline QuantumState apply_operator(const QuantumState& s, const CMatrix& op, std::span<const int> positions) {
    const int n = s.num_qubits();
    detail::check_positions(n, positions);
    const auto local_dim = static_cast<Eigen::Index>(std::size_t{1} << positions.size());
    if (op.rows() != local_dim || op.cols() != local_dim) throw ArgumentError("operator size does not match qubit count");

    if (s.is_pure()) {
        CVector psi = s.amplitudes();
        detail::apply_local(psi.data(), 1, n, op, positions);
        return QuantumState(std::move(psi), s.labels());
    }
    CMatrix rho = s.density();
    const auto dim = rho.rows();
    for (Eigen::Index c = 0; c < dim; ++c) detail::apply_local(rho.col(c).data(), 1, n, op, positions);
    CMatrix t = rho.adjoint();
    for (Eigen::Index c = 0; c < dim; ++c) detail::apply_local(t.col(c).data(), 1, n, op, positions);
    return QuantumState(CMatrix(t.adjoint()), s.labels());
}

inline QuantumState apply_gate(const QuantumState& s, const SingleQubitGate& g, int qubit) {
    const std::array<int, 1> pos{qubit};
    return apply_operator(s, g.matrix(), pos);
}

/// Result of a trace-decreasing map: renormalized state and the trace it had.
struct BranchResult {
    QuantumState state;
    double probability = 0.0;
};

/// Applies the Kraus operators {K_j} on `positions`, returns the renormalized
/// state together with the pre-normalization trace.  A single operator keeps
/// pure states pure; several operators promote to matrix form.
inline BranchResult apply_kraus(const QuantumState& s, std::span<const CMatrix> kraus, std::span<const int> positions) {
    if (kraus.empty()) throw ArgumentError("empty Kraus set");
    if (kraus.size() == 1 && s.is_pure()) {
        QuantumState out = apply_operator(s, kraus[0], positions);
        const double p = out.trace();
        if (!(p > kAlgebraicTol)) throw BranchImpossibleError("channel output has zero trace");
        CVector psi = out.amplitudes() / std::sqrt(p);
        return {QuantumState(std::move(psi), s.labels()), p};
    }
    const QuantumState mixed = s.to_mixed();
    CMatrix acc = CMatrix::Zero(static_cast<Eigen::Index>(s.dim()), static_cast<Eigen::Index>(s.dim()));
    for (const CMatrix& k : kraus) acc += apply_operator(mixed, k, positions).density();
    const double p = acc.trace().real();
    if (!(p > kAlgebraicTol)) throw BranchImpossibleError("channel output has zero trace");
    acc = ((acc + acc.adjoint()) / (2.0 * p)).eval();
    return {QuantumState(std::move(acc), s.labels()), p};
}

/// Projects `qubit` onto the outcome of `basis`, removes it, renormalizes.
inline BranchResult project(const QuantumState& s, int qubit, Basis basis, int outcome) {
    const int n = s.num_qubits();
    if (qubit < 0 || qubit >= n) throw ArgumentError("qubit index out of range");
    const Eigen::Vector2cd b = detail::basis_vector(basis, outcome);
    const int shift = detail::shift_of(n, qubit);
    const std::size_t low_mask = (std::size_t{1} << shift) - 1;
    const std::size_t rest_dim = detail::dim_of(n - 1);
    auto insert = [&](std::size_t r, std::size_t bit) {
        return ((r & ~low_mask) << 1) | (bit << shift) | (r & low_mask);
    };
    std::vector<int> labels = s.labels();
    labels.erase(labels.begin() + qubit);

    if (s.is_pure()) {
        const auto& psi = s.amplitudes();
        CVector out(static_cast<Eigen::Index>(rest_dim));
        for (std::size_t r = 0; r < rest_dim; ++r) {
            out(static_cast<Eigen::Index>(r)) =
                std::conj(b(0)) * psi(static_cast<Eigen::Index>(insert(r, 0))) +
                std::conj(b(1)) * psi(static_cast<Eigen::Index>(insert(r, 1)));
        }
        const double p = out.squaredNorm();
        if (!(p > kAlgebraicTol)) throw BranchImpossibleError("projection branch has zero probability");
        out /= std::sqrt(p);
        return {QuantumState(std::move(out), std::move(labels)), std::min(1.0, p)};
    }
    const CMatrix rho = s.density();
    CMatrix out(static_cast<Eigen::Index>(rest_dim), static_cast<Eigen::Index>(rest_dim));
    for (std::size_t r1 = 0; r1 < rest_dim; ++r1) {
        for (std::size_t r2 = 0; r2 < rest_dim; ++r2) {
            Complex acc = 0.0;
            for (std::size_t x = 0; x < 2; ++x) {
                for (std::size_t y = 0; y < 2; ++y) {
                    acc += std::conj(b(static_cast<Eigen::Index>(x))) *
                           rho(static_cast<Eigen::Index>(insert(r1, x)), static_cast<Eigen::Index>(insert(r2, y))) *
                           b(static_cast<Eigen::Index>(y));
                }
            }
            out(static_cast<Eigen::Index>(r1), static_cast<Eigen::Index>(r2)) = acc;
        }
    }
    const double p = out.trace().real();
    if (!(p > kAlgebraicTol)) throw BranchImpossibleError("projection branch has zero probability");
    out = ((out + out.adjoint()) / (2.0 * p)).eval();
    return {QuantumState(std::move(out), std::move(labels)), std::min(1.0, p)};
}

/// <P> for a Hermitian Pauli string.
inline double expectation(const QuantumState& s, const PauliString& p) {
    const int n = s.num_qubits();
    if (p.size() != n) {
        throw ArgumentError("Pauli string has " + std::to_string(p.size()) + " letters, state has " +
                            std::to_string(n) + " qubits");
    }
    if (!p.is_hermitian()) throw ArgumentError("expectation requires a Hermitian Pauli string");
    const std::uint64_t xm = p.x_mask();
    const std::uint64_t zm = p.z_mask();
    int y_count = 0;
    for (Pauli l : p.letters()) y_count += l == Pauli::Y ? 1 : 0;
    // P|c> = i^{#Y} (-1)^{popcount(c & zmask)} |c ^ xmask>
    const Complex y_phase = std::pow(Complex(0, 1), y_count) * p.coefficient();
    const std::size_t dim = s.dim();
    Complex acc = 0.0;
    if (s.is_pure()) {
        const auto& psi = s.amplitudes();
        for (std::size_t c = 0; c < dim; ++c) {
            const double sgn = (std::popcount(c & zm) & 1) ? -1.0 : 1.0;
            acc += std::conj(psi(static_cast<Eigen::Index>(c ^ xm))) * sgn * psi(static_cast<Eigen::Index>(c));
        }
    } else {
        const CMatrix rho = s.density();
        for (std::size_t c = 0; c < dim; ++c) {
            const double sgn = (std::popcount(c & zm) & 1) ? -1.0 : 1.0;
            acc += sgn * rho(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(c ^ xm));
        }
    }
    return (acc * y_phase).real();
}

/// Reduced density matrix on the qubits at `keep` (positions, any order; the
/// result keeps them in ascending position order).
inline QuantumState partial_trace(const QuantumState& s, std::span<const int> keep) {
    const int n = s.num_qubits();
    if (keep.empty()) throw ArgumentError("partial trace needs a non-empty keep set");
    std::vector<int> kept(keep.begin(), keep.end());
    std::sort(kept.begin(), kept.end());
    if (std::adjacent_find(kept.begin(), kept.end()) != kept.end()) throw ArgumentError("repeated qubit in keep set");
    if (kept.front() < 0 || kept.back() >= n) throw ArgumentError("keep index out of range");
    if (static_cast<int>(kept.size()) > kMaxMixedQubits) throw CapacityError("reduced state too large for matrix form");

    std::vector<int> traced;
    for (int q = 0; q < n; ++q) {
        if (!std::binary_search(kept.begin(), kept.end(), q)) traced.push_back(q);
    }
    const int nk = static_cast<int>(kept.size());
    const int nt = static_cast<int>(traced.size());
    auto scatter = [n](std::size_t bits, const std::vector<int>& positions) {
        const int k = static_cast<int>(positions.size());
        std::size_t idx = 0;
        for (int j = 0; j < k; ++j) {
            if ((bits >> (k - 1 - j)) & 1U) idx |= std::size_t{1} << detail::shift_of(n, positions[static_cast<std::size_t>(j)]);
        }
        return idx;
    };
    const std::size_t dk = detail::dim_of(nk);
    const std::size_t dt = detail::dim_of(nt);
    std::vector<std::size_t> kidx(dk), tidx(dt);
    for (std::size_t i = 0; i < dk; ++i) kidx[i] = scatter(i, kept);
    for (std::size_t e = 0; e < dt; ++e) tidx[e] = scatter(e, traced);

    CMatrix out = CMatrix::Zero(static_cast<Eigen::Index>(dk), static_cast<Eigen::Index>(dk));
    if (s.is_pure()) {
        const auto& psi = s.amplitudes();
        for (std::size_t e = 0; e < dt; ++e) {
            CVector slice(static_cast<Eigen::Index>(dk));
            for (std::size_t i = 0; i < dk; ++i) slice(static_cast<Eigen::Index>(i)) = psi(static_cast<Eigen::Index>(kidx[i] | tidx[e]));
            out += slice * slice.adjoint();
        }
    } else {
        const CMatrix rho = s.density();
        for (std::size_t i = 0; i < dk; ++i) {
            for (std::size_t j = 0; j < dk; ++j) {
                Complex acc = 0.0;
                for (std::size_t e = 0; e < dt; ++e) {
                    acc += rho(static_cast<Eigen::Index>(kidx[i] | tidx[e]), static_cast<Eigen::Index>(kidx[j] | tidx[e]));
                }
                out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = acc;
            }
        }
    }
    std::vector<int> labels;
    for (int q : kept) labels.push_back(s.labels()[static_cast<std::size_t>(q)]);
    return QuantumState::from_density(std::move(out), std::move(labels));
}

namespace detail {
inline CMatrix psd_sqrt(const CMatrix& m) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(m);
    const Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}
}  // namespace detail

/// Uhlmann fidelity (squared convention: |<a|b>|^2 for pure states).
/// Insensitive to global phase.
inline double fidelity(const QuantumState& a, const QuantumState& b) {
    if (a.num_qubits() != b.num_qubits()) throw ArgumentError("fidelity between states of different size");
    if (a.is_pure() && b.is_pure()) return std::norm(a.amplitudes().dot(b.amplitudes()));
    if (a.is_pure()) return (a.amplitudes().adjoint() * b.density() * a.amplitudes())(0).real();
    if (b.is_pure()) return (b.amplitudes().adjoint() * a.density() * b.amplitudes())(0).real();
    const CMatrix ra = detail::psd_sqrt(a.density());
    const CMatrix inner = ra * b.density() * ra;
    Eigen::SelfAdjointEigenSolver<CMatrix> es((inner + inner.adjoint()) / 2.0);
    const double t = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
    return t * t;
}

}  // namespace loopcluster
