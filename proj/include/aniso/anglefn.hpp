#pragma once

#include "errors.hpp"
#include "quadrature.hpp"
#include "specfun.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <unsupported/Eigen/FFT>

namespace aniso {

using cplx = std::complex<double>;

/** @brief Polynomial in u = cos²θ: Σ_k p[k] u^k. */
struct CosPoly {
    std::vector<double> p;

    double value_u(double u) const
    {
        double acc = 0.0;
        for (auto it = p.rbegin(); it != p.rend(); ++it) acc = acc * u + *it;
        return acc;
    }
    double slope_u(double u) const
    {
        double acc = 0.0;
        for (std::size_t k = p.size(); k-- > 1;) acc = acc * u + static_cast<double>(k) * p[k];
        return acc;
    }
    double value(double theta) const
    {
        const double c = std::cos(theta);
        return value_u(c * c);
    }
    double derivative(double theta) const
    {
        const double c = std::cos(theta);
        return -std::sin(2.0 * theta) * slope_u(c * c);
    }
    CosPoly operator*(double k) const
    {
        CosPoly r = *this;
        for (auto& v : r.p) v *= k;
        return r;
    }
    CosPoly operator+(const CosPoly& o) const
    {
        CosPoly r;
        r.p.assign(std::max(p.size(), o.p.size()), 0.0);
        for (std::size_t i = 0; i < p.size(); ++i) r.p[i] += p[i];
        for (std::size_t i = 0; i < o.p.size(); ++i) r.p[i] += o.p[i];
        return r;
    }
    std::size_t degree() const { return p.empty() ? 0 : p.size() - 1; }
};

enum class Builtin { constant, cos2, cos4, cos2sin2, cos4_plus_tenth_cos2, custom };

inline std::string builtin_name(Builtin b)
{
    switch (b) {
    case Builtin::constant: return "constant";
    case Builtin::cos2: return "cos2";
    case Builtin::cos4: return "cos4";
    case Builtin::cos2sin2: return "cos2sin2";
    case Builtin::cos4_plus_tenth_cos2: return "cos4_plus_tenth_cos2";
    case Builtin::custom: return "custom";
    }
    return "custom";
}

inline std::optional<Builtin> parse_builtin(const std::string& s)
{
    if (s == "constant" || s == "const") return Builtin::constant;
    if (s == "cos2") return Builtin::cos2;
    if (s == "cos4") return Builtin::cos4;
    if (s == "cos2sin2") return Builtin::cos2sin2;
    if (s == "cos4_plus_tenth_cos2") return Builtin::cos4_plus_tenth_cos2;
    if (s == "custom") return Builtin::custom;
    return std::nullopt;
}

inline CosPoly builtin_poly(Builtin b)
{
    switch (b) {
    case Builtin::constant: return {{1.0}};
    case Builtin::cos2: return {{0.0, 1.0}};
    case Builtin::cos4: return {{0.0, 0.0, 1.0}};
    case Builtin::cos2sin2: return {{0.0, 1.0, -1.0}};
    case Builtin::cos4_plus_tenth_cos2: return {{0.0, 0.1, 1.0}};
    case Builtin::custom: break;
    }
    throw DomainError("anglefn", "custom angle functions have no closed form");
}

/**
 * @brief π-periodic angle function sampled at φ_j = jπ/n.
 *
 * Off-grid values come from the trigonometric interpolant
 * Ω(θ) = Re Σ_m C_m e^{2imθ}, m = 0..n/2, unless a closed form or an exact
 * evaluator is attached.
 */
class AngleFunction {
public:
    using Fn = std::function<double(double)>;

    AngleFunction() = default;

    static AngleFunction from_values(std::vector<double> values, Builtin tag = Builtin::custom)
    {
        const std::size_t n = values.size();
        if (n < 4 || (n & (n - 1)) != 0) throw DomainError("anglefn", "grid size must be a power of two >= 4");
        AngleFunction f;
        f.values_ = std::move(values);
        f.tag_ = tag;
        f.build_coefficients();
        f.finish();
        return f;
    }

    static AngleFunction from_poly(const CosPoly& poly, std::size_t n = 1024, Builtin tag = Builtin::custom)
    {
        AngleFunction f = sample([&](double t) { return poly.value(t); }, n);
        f.tag_ = tag;
        f.poly_ = poly;
        f.build_coefficients();
        f.finish();
        return f;
    }

    static AngleFunction builtin(Builtin b, std::size_t n = 1024) { return from_poly(builtin_poly(b), n, b); }

    /** @brief Sample an exactly known function; @p fn stays attached for off-grid evaluation. */
    static AngleFunction from_callable(Fn fn, std::size_t n = 1024, Fn dfn = {})
    {
        AngleFunction f = sample(fn, n);
        f.fn_ = std::make_shared<Fn>(std::move(fn));
        if (dfn) f.dfn_ = std::make_shared<Fn>(std::move(dfn));
        f.build_coefficients();
        f.finish();
        return f;
    }

    static AngleFunction from_coefficients(std::vector<cplx> coeffs, std::size_t n)
    {
        AngleFunction f;
        f.coeffs_ = std::move(coeffs);
        f.coeffs_.resize(n / 2 + 1, cplx{});
        f.values_ = synthesize(f.coeffs_, n);
        f.finish();
        return f;
    }

    std::size_t n() const { return values_.size(); }
    const std::vector<double>& values() const { return values_; }
    const std::vector<double>& derivative_values() const { return deriv_; }
    const std::vector<cplx>& coefficients() const { return coeffs_; }
    Builtin tag() const { return tag_; }
    std::string closed_form() const { return builtin_name(tag_); }
    const std::optional<CosPoly>& poly() const { return poly_; }
    bool symmetric() const { return symmetric_; }
    std::size_t bandwidth() const { return bandwidth_; }
    double node(std::size_t j) const { return std::numbers::pi * static_cast<double>(j) / static_cast<double>(n()); }

    double operator()(double theta) const { return eval(theta); }

    double eval(double theta) const
    {
        if (poly_) return poly_->value(theta);
        if (fn_) return (*fn_)(theta);
        return spectral(theta, false);
    }

    double eval_derivative(double theta) const
    {
        if (poly_) return poly_->derivative(theta);
        if (dfn_) return (*dfn_)(theta);
        return spectral(theta, true);
    }

    /** @brief f(θ + t) - f(θ) of the grid interpolant without cancellation for small t. */
    double increment(double theta, double t) const
    {
        const cplx z = std::polar(1.0, 2.0 * theta);
        cplx w = z;
        double acc = 0.0;
        for (std::size_t m = 1; m <= bandwidth_; ++m) {
            const double sm = std::sin(static_cast<double>(m) * t);
            acc += (coeffs_[m] * w * cplx(-2.0 * sm * sm, std::sin(2.0 * static_cast<double>(m) * t))).real();
            w *= z;
            if ((m & 63) == 63) w /= std::abs(w);
        }
        return acc;
    }

    double min_value() const { return *std::min_element(values_.begin(), values_.end()); }
    double max_value() const { return *std::max_element(values_.begin(), values_.end()); }
    double max_abs() const { return std::max(std::abs(min_value()), std::abs(max_value())); }

    /** @brief ∫_{-π}^{π} Ω(θ) dθ. */
    double integral() const { return 2.0 * std::numbers::pi * coeffs_[0].real(); }

    AngleFunction scaled(double k) const
    {
        auto c = coeffs_;
        for (auto& v : c) v *= k;
        AngleFunction r = from_coefficients(std::move(c), n());
        if (poly_) r.poly_ = *poly_ * k;
        if (fn_) {
            auto f = fn_;
            r.fn_ = std::make_shared<Fn>([f, k](double t) { return k * (*f)(t); });
        }
        if (dfn_) {
            auto f = dfn_;
            r.dfn_ = std::make_shared<Fn>([f, k](double t) { return k * (*f)(t); });
        }
        r.finish();
        return r;
    }

    AngleFunction plus(const AngleFunction& o) const
    {
        if (o.n() != n()) throw DomainError("anglefn", "grid sizes differ");
        auto c = coeffs_;
        for (std::size_t m = 0; m < c.size(); ++m) c[m] += o.coeffs_[m];
        AngleFunction r = from_coefficients(std::move(c), n());
        if (poly_ && o.poly_) r.poly_ = *poly_ + *o.poly_;
        r.finish();
        return r;
    }

    AngleFunction plus_constant(double k) const
    {
        AngleFunction r = *this;
        r.tag_ = Builtin::custom;
        r.coeffs_[0] += k;
        for (auto& v : r.values_) v += k;
        if (r.poly_) {
            if (r.poly_->p.empty()) r.poly_->p.push_back(0.0);
            r.poly_->p[0] += k;
        }
        if (fn_) {
            auto f = fn_;
            r.fn_ = std::make_shared<Fn>([f, k](double t) { return (*f)(t) + k; });
        }
        return r;
    }

    /** @brief θ ↦ Ω(θ + η). */
    AngleFunction shifted(double eta) const
    {
        if (eta == 0.0) return *this;
        auto c = coeffs_;
        for (std::size_t m = 0; m < c.size(); ++m) c[m] *= std::polar(1.0, 2.0 * static_cast<double>(m) * eta);
        AngleFunction r = from_coefficients(std::move(c), n());
        if (fn_) {
            auto f = fn_;
            r.fn_ = std::make_shared<Fn>([f, eta](double t) { return (*f)(t + eta); });
        }
        if (dfn_) {
            auto f = dfn_;
            r.dfn_ = std::make_shared<Fn>([f, eta](double t) { return (*f)(t + eta); });
        }
        r.finish();
        return r;
    }

    static std::vector<double> synthesize(const std::vector<cplx>& coeffs, std::size_t n)
    {
        std::vector<cplx> spec(n, cplx{});
        for (std::size_t m = 0; m < coeffs.size() && m < n; ++m) spec[m] = coeffs[m];
        std::vector<cplx> out;
        Eigen::FFT<double> fft;
        fft.inv(out, spec);
        std::vector<double> v(n);
        for (std::size_t j = 0; j < n; ++j) v[j] = static_cast<double>(n) * out[j].real();
        return v;
    }

private:
    template <class F>
    static AngleFunction sample(F&& fn, std::size_t n)
    {
        if (n < 4 || (n & (n - 1)) != 0) throw DomainError("anglefn", "grid size must be a power of two >= 4");
        AngleFunction f;
        f.values_.resize(n);
        for (std::size_t j = 0; j < n; ++j) f.values_[j] = fn(std::numbers::pi * static_cast<double>(j) / static_cast<double>(n));
        return f;
    }

    void build_coefficients()
    {
        const std::size_t n = values_.size();
        std::vector<cplx> in(values_.begin(), values_.end()), out;
        Eigen::FFT<double> fft;
        fft.fwd(out, in);
        coeffs_.assign(n / 2 + 1, cplx{});
        const double inv = 1.0 / static_cast<double>(n);
        coeffs_[0] = out[0].real() * inv;
        for (std::size_t m = 1; m < n / 2; ++m) coeffs_[m] = 2.0 * inv * out[m];
        coeffs_[n / 2] = out[n / 2].real() * inv;
    }

    void finish()
    {
        double scale = 0.0;
        for (const auto& c : coeffs_) scale = std::max(scale, std::abs(c));
        const double cut = 1e-15 * std::max(scale, 1e-300);
        bandwidth_ = 0;
        double asym = 0.0;
        for (std::size_t m = 0; m < coeffs_.size(); ++m) {
            if (std::abs(coeffs_[m]) <= cut) coeffs_[m] = cplx{};
            else bandwidth_ = m;
            asym = std::max(asym, std::abs(coeffs_[m].imag()));
        }
        symmetric_ = asym <= 1e-12 * std::max(scale, 1e-300);
        const std::size_t n = values_.size();
        deriv_.resize(n);
        if (poly_ || dfn_) {
            for (std::size_t j = 0; j < n; ++j) deriv_[j] = eval_derivative(node(j));
        } else {
            std::vector<cplx> d(coeffs_.size(), cplx{});
            for (std::size_t m = 1; m + 1 < coeffs_.size(); ++m) d[m] = coeffs_[m] * cplx(0.0, 2.0 * static_cast<double>(m));
            deriv_ = synthesize(d, n);
        }
    }

    double spectral(double theta, bool derivative) const
    {
        const std::size_t nyq = values_.size() / 2;
        const cplx z = std::polar(1.0, 2.0 * theta);
        cplx w(1.0, 0.0);
        double acc = 0.0;
        for (std::size_t m = 0; m <= bandwidth_; ++m) {
            if (derivative) {
                if (m != nyq) acc += (coeffs_[m] * w * cplx(0.0, 2.0 * static_cast<double>(m))).real();
            } else {
                acc += (coeffs_[m] * w).real();
            }
            w *= z;
            if ((m & 63) == 63) w /= std::abs(w);
        }
        return acc;
    }

    std::vector<double> values_;
    std::vector<double> deriv_;
    std::vector<cplx> coeffs_;
    std::optional<CosPoly> poly_;
    std::shared_ptr<Fn> fn_, dfn_;
    Builtin tag_ = Builtin::custom;
    bool symmetric_ = true;
    std::size_t bandwidth_ = 0;
};

/** @brief Kernel used by forward_transform on 1 < s < 2. */
enum class TransformKernel { subtracted, simplified };

namespace detail {

/** Quadrature nodes on [0, π/2] for mode-weighted kernels up to harmonic @p K. */
inline quad::NodeSet kernel_nodes(double power, std::size_t K, double eps)
{
    const double panel = std::min(1.0, 4.0 / static_cast<double>(std::max<std::size_t>(K, 1)));
    auto r = quad::graded_rule(std::numbers::pi / 2.0, power, panel, eps);
    r.nodes.t.push_back(r.eps);
    r.nodes.w.push_back(r.tip_weight);
    return r.nodes;
}

/** Σ_q W_q g_m(t_q) for m = 0..K, g_m = sin²(m t) or cos(2 m t). */
inline std::vector<double> mode_sums(const quad::NodeSet& nodes, const std::vector<double>& W, std::size_t K, bool sin_squared)
{
    std::vector<double> out(K + 1, 0.0);
    for (std::size_t q = 0; q < nodes.size(); ++q) {
        const double t = nodes.t[q];
        if (sin_squared) {
            const double c = 2.0 * std::cos(t);
            double sm1 = 0.0, sm = std::sin(t);
            for (std::size_t m = 1; m <= K; ++m) {
                out[m] += W[q] * sm * sm;
                const double next = c * sm - sm1;
                sm1 = sm;
                sm = next;
            }
        } else {
            const double c = 2.0 * std::cos(2.0 * t);
            double cm1 = std::cos(2.0 * t), cm = 1.0;
            for (std::size_t m = 0; m <= K; ++m) {
                out[m] += W[q] * cm;
                const double next = c * cm - cm1;
                cm1 = cm;
                cm = next;
            }
        }
    }
    return out;
}

inline AngleFunction apply_multipliers(const AngleFunction& f, const std::vector<double>& lambda)
{
    const auto& c = f.coefficients();
    std::vector<cplx> out(c.size(), cplx{});
    for (std::size_t m = 0; m < lambda.size() && m < c.size(); ++m) out[m] = lambda[m] * c[m];
    return AngleFunction::from_coefficients(std::move(out), f.n());
}

inline double sign_m(std::size_t m) { return (m & 1) ? -1.0 : 1.0; }

} // namespace detail

/**
 * @brief Ω ↦ Ω̃ with F[|x|^{-s}Ω(θ)] = |ξ|^{s-2} Ω̃(φ), 0 < s < 2.
 *
 * The subtracted kernel integrates |cos(φ-θ)|^{s-2}(Ω(θ) - Ω(φ+π/2)) after
 * pairing θ = φ+π/2 ± t; the paired difference is expanded on the Fourier
 * modes of the grid interpolant so no cancellation occurs near t = 0.
 */
inline AngleFunction forward_transform(const AngleFunction& omega, double s,
                                       TransformKernel kernel = TransformKernel::subtracted)
{
    if (!(s > 0.0 && s < 2.0)) throw BranchError("anglefn", "forward_transform needs 0<s<2; use log_transform for s=0");
    const std::size_t n = omega.n();
    if (s == 1.0) {
        std::vector<double> v(n);
        for (std::size_t j = 0; j < n; ++j) v[j] = omega.values()[(j + n / 2) % n];
        return AngleFunction::from_values(std::move(v));
    }
    const std::size_t K = omega.bandwidth();
    const double tau = specfun::tau_s(2.0 - s);
    std::vector<double> lambda(K + 1);
    if (kernel == TransformKernel::simplified) {
        if (s <= 1.0) throw BranchError("anglefn", "simplified kernel needs 1<s<2");
        auto nodes = detail::kernel_nodes(s - 2.0, K, 1e-9);
        std::vector<double> W(nodes.size());
        for (std::size_t q = 0; q < nodes.size(); ++q) W[q] = nodes.w[q] * std::pow(std::sin(nodes.t[q]), s - 2.0);
        auto J = detail::mode_sums(nodes, W, K, false);
        for (std::size_t m = 0; m <= K; ++m) lambda[m] = detail::sign_m(m) * 4.0 * tau * J[m];
    } else {
        auto nodes = detail::kernel_nodes(s, K, 1e-7);
        std::vector<double> W(nodes.size());
        for (std::size_t q = 0; q < nodes.size(); ++q) W[q] = nodes.w[q] * std::pow(std::sin(nodes.t[q]), s - 2.0);
        auto I = detail::mode_sums(nodes, W, K, true);
        const double cs = specfun::c_s(s);
        for (std::size_t m = 0; m <= K; ++m) lambda[m] = detail::sign_m(m) * (cs - 8.0 * tau * I[m]);
    }
    return detail::apply_multipliers(omega, lambda);
}

/** @brief Ω̃ ↦ Ω through Ω(θ) = τ_s ∫ |cos(θ-φ)|^{-s} Ω̃(φ) dφ, 0 < s < 1. */
inline AngleFunction inverse_transform(const AngleFunction& omega_tilde, double s)
{
    if (!(s > 0.0 && s < 1.0)) throw BranchError("anglefn", "inverse_transform needs 0<s<1");
    const std::size_t K = omega_tilde.bandwidth();
    auto nodes = detail::kernel_nodes(-s, K, 1e-9);
    std::vector<double> W(nodes.size());
    for (std::size_t q = 0; q < nodes.size(); ++q) W[q] = nodes.w[q] * std::pow(std::sin(nodes.t[q]), -s);
    auto J = detail::mode_sums(nodes, W, K, false);
    const double tau = specfun::tau_s(s);
    std::vector<double> mu(K + 1);
    for (std::size_t m = 0; m <= K; ++m) mu[m] = detail::sign_m(m) * 4.0 * tau * J[m];
    return detail::apply_multipliers(omega_tilde, mu);
}

/** @brief Angle transform for -ln|x| + Ω(θ); the constant part of Ω drops out. */
inline AngleFunction log_transform(const AngleFunction& omega)
{
    const std::size_t K = omega.bandwidth();
    auto nodes = detail::kernel_nodes(0.0, K, 1e-9);
    std::vector<double> W(nodes.size());
    for (std::size_t q = 0; q < nodes.size(); ++q) {
        const double sn = std::sin(nodes.t[q]);
        W[q] = nodes.w[q] / (sn * sn);
    }
    auto I = detail::mode_sums(nodes, W, K, true);
    constexpr double pi = std::numbers::pi;
    std::vector<double> lambda(K + 1, 0.0);
    for (std::size_t m = 1; m <= K; ++m) lambda[m] = detail::sign_m(m) * 8.0 * I[m] / (4.0 * pi * pi);
    auto c = omega.coefficients();
    std::vector<cplx> out(c.size(), cplx{});
    for (std::size_t m = 1; m <= K; ++m) out[m] = lambda[m] * c[m];
    out[0] = 1.0 / (2.0 * pi);
    return AngleFunction::from_coefficients(std::move(out), omega.n());
}

/** @brief Ω(θ) = -∫ ln|cos(φ-θ)| Ω̃_log(φ) dφ, shifted so that the grid minimum is 0. */
inline AngleFunction log_inverse_transform(const AngleFunction& omega_tilde)
{
    if (std::abs(omega_tilde.integral() - 1.0) > 1e-6)
        throw DomainError("anglefn", "log_inverse_transform needs unit mass, got " + std::to_string(omega_tilde.integral()));
    const std::size_t K = omega_tilde.bandwidth();
    auto nodes = detail::kernel_nodes(0.0, K, 1e-15);
    std::vector<double> W(nodes.size());
    for (std::size_t q = 0; q < nodes.size(); ++q) W[q] = nodes.w[q] * std::log(std::sin(nodes.t[q]));
    auto J = detail::mode_sums(nodes, W, K, false);
    std::vector<double> nu(K + 1);
    for (std::size_t m = 0; m <= K; ++m) nu[m] = -4.0 * detail::sign_m(m) * J[m];
    auto r = detail::apply_multipliers(omega_tilde, nu);
    return r.plus_constant(-r.min_value());
}

namespace detail {

/** Coefficients of ∂^{2k}_{ξ1} |ξ|^p at |ξ| = 1 as polynomials in p, divided by Π_{i<k}(p-2i). */
inline std::vector<std::vector<double>> cos_power_transform_table(std::size_t k)
{
    using Poly = std::vector<double>;
    auto mul_linear = [](const Poly& a, double c0, double c1) {
        Poly r(a.size() + 1, 0.0);
        for (std::size_t i = 0; i < a.size(); ++i) {
            r[i] += c0 * a[i];
            r[i + 1] += c1 * a[i];
        }
        return r;
    };
    const std::size_t D = 2 * k;
    std::vector<Poly> terms(D + 1);
    terms[0] = {1.0};
    for (std::size_t m = 0; m < D; ++m) {
        std::vector<Poly> next(D + 1);
        auto add = [](Poly& dst, const Poly& src) {
            if (dst.size() < src.size()) dst.resize(src.size(), 0.0);
            for (std::size_t i = 0; i < src.size(); ++i) dst[i] += src[i];
        };
        for (std::size_t j = 0; j <= D; ++j) {
            if (terms[j].empty()) continue;
            if (j > 0) add(next[j - 1], mul_linear(terms[j], static_cast<double>(j), 0.0));
            if (j + 1 <= D) add(next[j + 1], mul_linear(terms[j], -static_cast<double>(m + j), 1.0));
        }
        terms = std::move(next);
    }
    std::vector<Poly> q(k + 1);
    for (std::size_t i = 0; i <= k; ++i) {
        Poly a = terms[2 * i];
        for (std::size_t r = 0; r < k && !a.empty(); ++r) {
            const double root = 2.0 * static_cast<double>(r);
            Poly b(a.size() - 1, 0.0);
            double carry = 0.0;
            for (std::size_t d = a.size(); d-- > 1;) {
                carry = a[d] + carry * root;
                b[d - 1] = carry;
            }
            a = std::move(b);
        }
        q[i] = std::move(a);
    }
    return q;
}

inline double eval_poly(const std::vector<double>& a, double x)
{
    double acc = 0.0;
    for (auto it = a.rbegin(); it != a.rend(); ++it) acc = acc * x + *it;
    return acc;
}

} // namespace detail

/**
 * @brief Exact transform of a polynomial in cos²θ, as a polynomial in cos²φ.
 * Pass s = 0 for the logarithmic transform.
 */
inline CosPoly closed_form_transform(const CosPoly& poly, double s)
{
    if (!(s >= 0.0 && s < 2.0)) throw BranchError("anglefn", "closed_form_transform needs 0<=s<2");
    constexpr double pi = std::numbers::pi;
    CosPoly out{std::vector<double>(std::max<std::size_t>(poly.p.size(), 1), 0.0)};
    if (!poly.p.empty()) out.p[0] += s == 0.0 ? 0.0 : specfun::c_s(s) * poly.p[0];
    if (s == 0.0) out.p[0] += 1.0 / (2.0 * pi);
    for (std::size_t k = 1; k < poly.p.size(); ++k) {
        if (poly.p[k] == 0.0) continue;
        auto q = detail::cos_power_transform_table(k);
        double pref;
        double p;
        if (s == 0.0) {
            pref = 1.0 / (2.0 * pi);
            for (std::size_t i = 1; i < k; ++i) pref /= 2.0 * static_cast<double>(i);
            p = 2.0 * static_cast<double>(k) - 2.0;
        } else {
            pref = specfun::c_s(s);
            for (std::size_t i = 0; i < k; ++i) pref /= s + 2.0 * static_cast<double>(i);
            p = s + 2.0 * static_cast<double>(k) - 2.0;
        }
        for (std::size_t i = 0; i <= k; ++i) out.p[i] += poly.p[k] * pref * detail::eval_poly(q[i], p);
    }
    return out;
}

} // namespace aniso
