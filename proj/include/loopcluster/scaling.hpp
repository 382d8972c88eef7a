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

// Detection-rate and scaling-ratio models for the loop source and for
// parametric down-conversion sources.

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "loopcluster/errors.hpp"

namespace loopcluster {

/// Efficiencies: detector, setup, loop, source brightness, fusion gate.
struct EfficiencyBudget {
    std::string name = "custom";
    double R = 81e6;
    double eta_d = 1.0;
    double eta_s = 1.0;
    double eta_l = 1.0;
    double eta_b = 1.0;
    double eta_g = 1.0;

    void validate() const {
        if (!(R > 0.0)) throw ArgumentError("repetition rate must be positive");
        const double etas[] = {eta_d, eta_s, eta_l, eta_b, eta_g};
        for (double e : etas) {
            if (!(e > 0.0 && e <= 1.0)) throw ArgumentError("efficiencies must lie in (0, 1] (budget " + name + ")");
        }
    }

    /// 81 MHz, eta_d 0.25, eta_s 0.7, eta_l 0.75, eta_b 0.15, eta_g 0.5.
    static EfficiencyBudget reference() { return {"reference", 81e6, 0.25, 0.7, 0.75, 0.15, 0.5}; }
    /// The reference budget with eta_d = 0.9 detectors.
    static EfficiencyBudget reference_eta_d09() {
        EfficiencyBudget b = reference();
        b.name = "reference-eta_d-0.9";
        b.eta_d = 0.9;
        return b;
    }
    /// Unit efficiencies with the 1/2 fusion post-selection.
    static EfficiencyBudget gate_floor() { return {"gate-floor", 81e6, 1.0, 1.0, 1.0, 1.0, 0.5}; }

    static EfficiencyBudget preset(const std::string& name) {
        if (name == "reference") return reference();
        if (name == "reference-eta_d-0.9") return reference_eta_d09();
        if (name == "gate-floor") return gate_floor();
        throw ArgumentError("unknown budget preset \"" + name + "\" (expected reference, reference-eta_d-0.9 or gate-floor)");
    }
};

/// R_n = R (eta_d eta_s eta_l eta_b)^n eta_g^{n-1}.
inline double detection_rate(const EfficiencyBudget& b, int n) {
    b.validate();
    if (n < 1) throw ArgumentError("detection rate needs n >= 1");
    return b.R * std::pow(b.eta_d * b.eta_s * b.eta_l * b.eta_b, n) * std::pow(b.eta_g, n - 1);
}

/// r = R_n / R_{n+1} = 1 / (eta_d eta_s eta_b eta_g eta_l).
inline double scaling_ratio(const EfficiencyBudget& b) {
    b.validate();
    return 1.0 / (b.eta_d * b.eta_s * b.eta_b * b.eta_g * b.eta_l);
}

struct PdcSource {
    double tau_int = 0.0;

    double lambda() const {
        if (!(tau_int >= 0.0)) throw ArgumentError("interaction parameter must be non-negative");
        return std::tanh(tau_int);
    }
};

/// |lambda|^2 = tanh^2(tau).
inline double pdc_pair_probability(const PdcSource& src) {
    const double l = src.lambda();
    return l * l;
}

/// V_2 = (1 - tanh^2 tau) / (1 + tanh^2 tau).
inline double pdc_visibility(const PdcSource& src) {
    const double t2 = pdc_pair_probability(src);
    return (1.0 - t2) / (1.0 + t2);
}

/// (1 + V2)/(1 - V2), times 2 with the fusion gate.
inline double pdc_scaling_ratio(double v2, bool include_gate) {
    if (v2 == 1.0) throw SingularLimitError("unit visibility needs vanishing pair probability; r diverges");
    if (!(v2 > 0.0 && v2 < 1.0)) throw ArgumentError("v2 must lie in (0, 1)");
    const double r = (1.0 + v2) / (1.0 - v2);
    return include_gate ? 2.0 * r : r;
}

struct RatioCurveRow {
    double v2 = 0.0;
    double r_pdc_with_gate = 0.0;
    double r_gate_floor = 2.0;
};

struct BudgetPoint {
    std::string name;
    double v2 = 0.0;
    double r = 0.0;
};

inline std::vector<RatioCurveRow> ratio_curves(const std::vector<double>& v2s) {
    std::vector<RatioCurveRow> rows;
    rows.reserve(v2s.size());
    for (double v : v2s) rows.push_back({v, pdc_scaling_ratio(v, true), scaling_ratio(EfficiencyBudget::gate_floor())});
    return rows;
}

/// Marker for a loop-source budget measured at visibility v2.
inline BudgetPoint budget_point(const EfficiencyBudget& b, double v2) { return {b.name, v2, scaling_ratio(b)}; }

}  // namespace loopcluster
