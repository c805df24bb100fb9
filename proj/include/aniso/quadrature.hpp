#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <utility>
#include <vector>

namespace aniso::quad {

/** @brief Gauss-Legendre nodes and weights on [-1, 1]. */
struct GaussRule {
    std::vector<double> x;
    std::vector<double> w;
};

inline GaussRule gauss_legendre(std::size_t n)
{
    GaussRule r;
    if (n == 1) return {{0.0}, {2.0}};
    r.x.resize(n);
    r.w.resize(n);
    const std::size_t m = (n + 1) / 2;
    for (std::size_t i = 0; i < m; ++i) {
        double z = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75)
                            / (static_cast<double>(n) + 0.5));
        double dp = 1.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = z;
            for (std::size_t k = 2; k <= n; ++k) {
                const double pk = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / static_cast<double>(k);
                p0 = p1;
                p1 = pk;
            }
            dp = static_cast<double>(n) * (z * p1 - p0) / (z * z - 1.0);
            const double dz = p1 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        r.x[i] = -z;
        r.x[n - 1 - i] = z;
        r.w[i] = r.w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    return r;
}

inline const GaussRule& gl16()
{
    static const GaussRule rule = gauss_legendre(16);
    return rule;
}

/** @brief A flat list of abscissae and weights for a composite rule. */
struct NodeSet {
    std::vector<double> t;
    std::vector<double> w;

    void append_panel(double a, double b, const GaussRule& g)
    {
        const double h = 0.5 * (b - a), c = 0.5 * (a + b);
        for (std::size_t i = 0; i < g.x.size(); ++i) {
            t.push_back(c + h * g.x[i]);
            w.push_back(h * g.w[i]);
        }
    }
    std::size_t size() const { return t.size(); }
};

/**
 * @brief Composite rule on [0, T] for integrands behaving like t^p times an
 * even smooth function near t = 0.
 *
 * Uniform panels of width at most @p panel away from the origin, geometric
 * panels (ratio 1/4) toward it, and a final point mass on [0, eps] that
 * integrates the leading power exactly.
 */
struct GradedRule {
    NodeSet nodes;
    double eps = 0.0;
    double tip_weight = 0.0; /* weight applied to f(eps) */
};

inline GradedRule graded_rule(double T, double power, double panel, double eps)
{
    GradedRule r;
    const auto& g = gl16();
    double h0 = std::min(T, panel);
    const int uniform = static_cast<int>(std::ceil((T - h0) / panel - 1e-12));
    const double w = uniform > 0 ? (T - h0) / uniform : 0.0;
    for (int k = 0; k < uniform; ++k) r.nodes.append_panel(h0 + k * w, h0 + (k + 1) * w, g);
    double b = h0;
    constexpr double sigma = 0.25;
    while (b * sigma > eps) {
        r.nodes.append_panel(b * sigma, b, g);
        b *= sigma;
    }
    r.eps = b;
    r.tip_weight = b / (power + 1.0);
    return r;
}

template <class F>
double apply(const GradedRule& r, F&& f)
{
    double acc = r.tip_weight * f(r.eps);
    for (std::size_t i = 0; i < r.nodes.size(); ++i) acc += r.nodes.w[i] * f(r.nodes.t[i]);
    return acc;
}

/** @brief ∫_0^T f for f ~ t^power near 0; see graded_rule. */
template <class F>
double graded(F&& f, double T, double power, double panel = 1.0, double eps = 1e-9)
{
    return apply(graded_rule(T, power, panel, eps), std::forward<F>(f));
}

/** @brief Composite 16-point Gauss-Legendre on [a, b] with @p panels panels. */
template <class F>
double composite(F&& f, double a, double b, int panels)
{
    const auto& g = gl16();
    const double h = (b - a) / panels;
    double acc = 0.0;
    for (int k = 0; k < panels; ++k) {
        const double lo = a + k * h, half = 0.5 * h, c = lo + half;
        for (std::size_t i = 0; i < g.x.size(); ++i) acc += half * g.w[i] * f(c + half * g.x[i]);
    }
    return acc;
}

} // namespace aniso::quad
