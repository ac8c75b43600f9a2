#pragma once

// Layered finger-pad skin: Neo-Hookean layers whose moduli share a fixed
// ratio and one scale k, a serial uniaxial compression model, and fitting of
// k to measured force-displacement curves.

#include <array>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "softcue/detail/numeric.hpp"
#include "softcue/errors.hpp"
#include "softcue/stiffness.hpp"

namespace softcue::skin {

/// Neo-Hookean strain energy Psi = C10 (I1bar - 3) + (J - 1)^2 / D1 with
/// C10 = G / 2 and D1 = 2 / K. Moduli in kPa.
struct NeoHookean {
    double shear_modulus_kpa;
    std::optional<double> bulk_modulus_kpa;

    double c10() const { return shear_modulus_kpa / 2.0; }
    double d1() const {
        if (!bulk_modulus_kpa || !(*bulk_modulus_kpa > 0.0))
            throw ArgumentError("NeoHookean: D1 needs a positive bulk modulus");
        return 2.0 / *bulk_modulus_kpa;
    }

    double strain_energy(double i1_bar, double jacobian) const {
        double psi = c10() * (i1_bar - 3.0);
        if (bulk_modulus_kpa) psi += (jacobian - 1.0) * (jacobian - 1.0) / d1();
        return psi;
    }

    /// Incompressible uniaxial nominal stress P = G (stretch - stretch^-2).
    double uniaxial_nominal_stress(double stretch) const {
        return shear_modulus_kpa * (stretch - 1.0 / (stretch * stretch));
    }

    /// Stretch in (0, 1] carrying compressive nominal stress `stress_kpa` >= 0.
    double compressed_stretch(double stress_kpa) const {
        if (stress_kpa < 0.0) throw ArgumentError("compressed_stretch: stress must be non-negative");
        return stretch_for_normalized(stress_kpa / shear_modulus_kpa);
    }

    /// Solves stretch^-2 - stretch = u on (0, 1] by safeguarded Newton.
    static double stretch_for_normalized(double u) {
        if (u == 0.0) return 1.0;
        // g is strictly decreasing; g(1/sqrt(1+u)) > 0 >= g(1).
        double lo = 1.0 / std::sqrt(1.0 + u), hi = 1.0;
        double x = 0.5 * (lo + hi);
        for (int it = 0; it < 200; ++it) {
            const double g = 1.0 / (x * x) - x - u;
            if (g > 0.0) lo = x;
            else hi = x;
            const double dg = -2.0 / (x * x * x) - 1.0;
            double next = x - g / dg;
            if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
            if (std::abs(next - x) <= 1e-16 * x || hi - lo <= 1e-16) return next;
            x = next;
        }
        throw NumericError("compressed_stretch: did not converge");
    }
};

/// Epidermis, dermis, hypodermis.
inline constexpr std::size_t layer_count = 3;
inline constexpr std::array<double, layer_count> elasticity_ratio{510.63, 21.37, 1.00};

struct LayerStack {
    std::array<double, layer_count> thickness_mm{0.47, 1.0, 3.0};
    std::array<double, layer_count> base_modulus_kpa = elasticity_ratio;
    double scale = 1.0;
    double area_mm2 = 50.0;

    void validate() const {
        for (double t : thickness_mm)
            if (!(t > 0.0)) throw ArgumentError("LayerStack: thicknesses must be positive");
        for (double g : base_modulus_kpa)
            if (!(g > 0.0)) throw ArgumentError("LayerStack: moduli must be positive");
        if (!(scale > 0.0)) throw ArgumentError("LayerStack: scale k must be positive");
        if (!(area_mm2 > 0.0)) throw ArgumentError("LayerStack: contact area must be positive");
    }

    double total_thickness() const { return thickness_mm[0] + thickness_mm[1] + thickness_mm[2]; }

    std::array<double, layer_count> moduli_kpa() const {
        return {base_modulus_kpa[0] * scale, base_modulus_kpa[1] * scale, base_modulus_kpa[2] * scale};
    }
};

/// (epidermis, dermis, hypodermis) moduli in kPa for scale k.
inline std::array<double, layer_count> moduli_from_scale(double k) {
    if (!(k > 0.0)) throw ArgumentError("moduli_from_scale: k must be positive");
    return {elasticity_ratio[0] * k, elasticity_ratio[1] * k, elasticity_ratio[2] * k};
}

/// k^-1; larger means softer skin.
inline double softness_index(double k) {
    if (!(k > 0.0)) throw ArgumentError("softness_index: k must be positive");
    return 1.0 / k;
}

struct CompressionState {
    double force_n;
    double stress_kpa;
    std::array<double, layer_count> layer_compression_mm;
};

/// Equilibrium of the serial stack under imposed compression: every layer
/// carries the same nominal stress and the layer compressions add up to
/// `displacement_mm`.
inline CompressionState solve_compression(const LayerStack& stack, double displacement_mm) {
    stack.validate();
    if (!(displacement_mm >= 0.0)) throw DomainError("forward_compression: displacement must be >= 0");
    if (!(displacement_mm < stack.total_thickness()))
        throw DomainError("forward_compression: displacement reaches the stack thickness");
    CompressionState state{0.0, 0.0, {0.0, 0.0, 0.0}};
    if (displacement_mm == 0.0) return state;

    // Solve in stress per unit scale so the root does not depend on k.
    auto layers_at = [&](double u) {
        std::array<double, layer_count> c{};
        for (std::size_t i = 0; i < layer_count; ++i)
            c[i] = stack.thickness_mm[i] *
                   (1.0 - NeoHookean::stretch_for_normalized(u / stack.base_modulus_kpa[i]));
        return c;
    };
    auto excess = [&](double u) {
        const auto c = layers_at(u);
        return (c[0] + c[1] + c[2]) - displacement_mm;
    };
    double hi = 1.0;
    while (excess(hi) <= 0.0) {
        hi *= 2.0;
        if (!std::isfinite(hi)) throw NumericError("forward_compression: stress bracket diverged");
    }
    const double u = detail::bisect(excess, 0.0, hi, 0.0, 400);
    const double residual = excess(u);
    if (!(std::abs(residual) <= 1e-10 * std::max(1.0, displacement_mm)))
        throw NumericError("forward_compression: equilibrium not reached");

    state.layer_compression_mm = layers_at(u);
    state.stress_kpa = u * stack.scale;
    state.force_n = state.stress_kpa * stack.area_mm2 * 1e-3;
    return state;
}

/// Compressive force (N) at `displacement_mm`.
inline double forward_compression(const LayerStack& stack, double displacement_mm) {
    return solve_compression(stack, displacement_mm).force_n;
}

/// Anything mapping (scale k, displacement mm) to force N.
template <class M>
concept ForwardModel = requires(const M& m, double k, double d) {
    { m(k, d) } -> std::convertible_to<double>;
};

/// The serial stack as a ForwardModel; the template's own scale is ignored.
struct StackModel {
    LayerStack stack;

    double operator()(double k, double displacement_mm) const {
        LayerStack s = stack;
        s.scale = k;
        return forward_compression(s, displacement_mm);
    }
};

struct ScaleFit {
    double k;
    double mean_r2;
    std::vector<double> r2;  // one per curve
};

struct ScaleBounds {
    double lo = 0.05;
    double hi = 50.0;
};

/// Coefficient of determination of the model at scale k against each curve.
template <ForwardModel Model>
std::vector<double> scale_r2(std::span<const FDCurve> curves, const Model& model, double k) {
    std::vector<double> out;
    out.reserve(curves.size());
    for (const auto& curve : curves) {
        const auto pts = curve.points();
        double mean = 0.0;
        for (const auto& p : pts) mean += p.force_n;
        mean /= static_cast<double>(pts.size());
        double ss_tot = 0.0, ss_res = 0.0;
        for (const auto& p : pts) {
            const double r = p.force_n - model(k, p.displacement_mm);
            ss_res += r * r;
            ss_tot += (p.force_n - mean) * (p.force_n - mean);
        }
        if (!(ss_tot > 0.0)) throw FitError("fit_scale: measured forces are constant");
        out.push_back(1.0 - ss_res / ss_tot);
    }
    return out;
}

/// Scale k maximizing the mean R^2 over all curves, searched by golden section
/// on log k within `bounds`.
template <ForwardModel Model>
ScaleFit fit_scale(std::span<const FDCurve> curves, const Model& model, ScaleBounds bounds = {}) {
    if (curves.empty()) throw InsufficientDataError("fit_scale: no curves");
    if (!(bounds.lo > 0.0 && bounds.hi > bounds.lo)) throw ArgumentError("fit_scale: invalid bounds");
    auto objective = [&](double log_k) {
        const auto r2 = scale_r2(curves, model, std::exp(log_k));
        return detail::mean(r2);
    };
    const double a = std::log(bounds.lo), b = std::log(bounds.hi);
    const auto best = detail::golden_section_max(objective, a, b, 1e-11);

    const double at_lo = objective(a), at_hi = objective(b);
    const double spread = std::max({best.value, at_lo, at_hi}) - std::min({best.value, at_lo, at_hi});
    if (!(spread > 1e-12)) throw FitError("fit_scale: objective is flat across the bounds");

    const double k = std::exp(best.x);
    auto r2 = scale_r2(curves, model, k);
    return {k, detail::mean(r2), std::move(r2)};
}

inline ScaleFit fit_scale(std::span<const FDCurve> curves, const LayerStack& stack_template,
                          ScaleBounds bounds = {}) {
    return fit_scale(curves, StackModel{stack_template}, bounds);
}

}  // namespace softcue::skin
