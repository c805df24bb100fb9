#include <aniso/anglefn.hpp>

#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <random>

using namespace aniso;
constexpr double pi = std::numbers::pi;

namespace {

/** Fourier multiplier of |x|^{-s} e^{2imθ} from the Bochner formula, used as an oracle. */
double bochner(std::size_t m, double s)
{
    const double sgn = (m % 2) ? -1.0 : 1.0;
    return sgn * std::exp((s - 1.0) * std::log(pi) + std::lgamma(m + 1.0 - s / 2) - std::lgamma(m + s / 2));
}

AngleFunction oracle_forward(const AngleFunction& f, double s)
{
    auto c = f.coefficients();
    for (std::size_t m = 0; m < c.size(); ++m) c[m] *= bochner(m, s);
    return AngleFunction::from_coefficients(c, f.n());
}

double max_grid_diff(const AngleFunction& f, const std::function<double(double)>& g)
{
    double e = 0.0;
    for (std::size_t j = 0; j < f.n(); ++j) e = std::max(e, std::abs(f.values()[j] - g(f.node(j))));
    return e;
}

double max_grid_diff(const AngleFunction& f, const AngleFunction& g)
{
    double e = 0.0;
    for (std::size_t j = 0; j < f.n(); ++j) e = std::max(e, std::abs(f.values()[j] - g.values()[j]));
    return e;
}

AngleFunction smooth_custom(std::size_t n = 1024)
{
    return AngleFunction::from_callable([](double t) { return std::exp(0.7 * std::cos(2 * t) + 0.2 * std::sin(4 * t)); }, n);
}

} // namespace

TEST(AngleFunction, EvaluationBasics)
{
    auto c2 = AngleFunction::builtin(Builtin::cos2);
    EXPECT_NEAR(c2.eval(0.0), 1.0, 1e-15);
    EXPECT_NEAR(c2.eval_derivative(pi / 4), -1.0, 1e-15);
    EXPECT_EQ(c2.closed_form(), "cos2");
    EXPECT_TRUE(c2.symmetric());
    EXPECT_EQ(c2.bandwidth(), 1u);
}

TEST(AngleFunction, SpectralInterpolationExactForTrigPolynomials)
{
    auto exact = [](double t) { return 1.0 + 0.3 * std::cos(2 * t) - 0.1 * std::sin(6 * t) + 0.05 * std::cos(40 * t); };
    std::vector<double> v(256);
    for (std::size_t j = 0; j < v.size(); ++j) v[j] = exact(pi * j / 256.0);
    auto f = AngleFunction::from_values(v);
    EXPECT_FALSE(f.symmetric());
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(-4.0, 4.0);
    for (int i = 0; i < 50; ++i) {
        const double t = U(rng);
        EXPECT_NEAR(f.eval(t), exact(t), 1e-13);
        EXPECT_NEAR(f.eval(t + pi), f.eval(t), 1e-12);
    }
}

TEST(AngleFunction, SpectralDerivativeMatchesFiniteDifferences)
{
    std::vector<double> v(1024);
    for (std::size_t j = 0; j < v.size(); ++j) v[j] = std::exp(0.5 * std::cos(2 * pi * j / 1024.0));
    auto f = AngleFunction::from_values(v);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> U(0.0, pi);
    const double h = 1e-5;
    for (int i = 0; i < 100; ++i) {
        const double t = U(rng);
        EXPECT_NEAR(f.eval_derivative(t), (f.eval(t + h) - f.eval(t - h)) / (2 * h), 1e-6);
    }
    for (std::size_t j = 0; j < 1024; j += 37) EXPECT_NEAR(f.derivative_values()[j], f.eval_derivative(f.node(j)), 1e-10);
}

TEST(ForwardTransform, ConstantMapsToCs)
{
    auto one = AngleFunction::builtin(Builtin::constant);
    for (double s : {0.2, 0.4, 0.9, 1.4}) {
        auto t = forward_transform(one, s);
        EXPECT_LT(max_grid_diff(t, [&](double) { return specfun::c_s(s); }), 1e-10) << s;
    }
}

TEST(ForwardTransform, PaperClosedFormsAtS04)
{
    const double s = 0.4, cs = specfun::c_s(s);
    auto u = [](double p) { return std::cos(p) * std::cos(p); };
    auto c2 = forward_transform(AngleFunction::builtin(Builtin::cos2), s);
    EXPECT_LT(max_grid_diff(c2, [&](double p) { return cs * (1 - (2 - s) * u(p)) / s; }), 1e-8);
    auto c4 = forward_transform(AngleFunction::builtin(Builtin::cos4), s);
    EXPECT_LT(max_grid_diff(c4, [&](double p) {
        return cs * (3 - 6 * (2 - s) * u(p) + (4 - s) * (2 - s) * u(p) * u(p)) / (s * (s + 2));
    }), 1e-8);
    auto cs2 = forward_transform(AngleFunction::builtin(Builtin::cos2sin2), s);
    EXPECT_LT(max_grid_diff(cs2, [&](double p) {
        return cs * (-(1 - s) + (4 - s) * (2 - s) * u(p) - (4 - s) * (2 - s) * u(p) * u(p)) / (s * (s + 2));
    }), 1e-8);
    auto mix = forward_transform(AngleFunction::builtin(Builtin::cos4_plus_tenth_cos2), s);
    EXPECT_LT(max_grid_diff(mix, [&](double p) { return cs * (3.24 - 9.984 * u(p) + 5.76 * u(p) * u(p)) / 0.96; }), 1e-8);
}

TEST(ForwardTransform, ClosedFormPolynomialsMatchPaper)
{
    const double s = 0.4, cs = specfun::c_s(s);
    auto c4 = closed_form_transform(builtin_poly(Builtin::cos4), s);
    ASSERT_EQ(c4.p.size(), 3u);
    EXPECT_NEAR(c4.p[0], cs * 3 / (s * (s + 2)), 1e-13);
    EXPECT_NEAR(c4.p[1], -cs * 6 * (2 - s) / (s * (s + 2)), 1e-13);
    EXPECT_NEAR(c4.p[2], cs * (4 - s) * (2 - s) / (s * (s + 2)), 1e-13);
    auto log2 = closed_form_transform(builtin_poly(Builtin::cos2), 0.0);
    EXPECT_NEAR(log2.p[0], 2.0 / (2 * pi), 1e-15);
    EXPECT_NEAR(log2.p[1], -2.0 / (2 * pi), 1e-15);
}

TEST(ForwardTransform, ClosedFormAtSOneIsAShift)
{
    CosPoly p{{0.3, -0.2, 0.5, 0.1}};
    auto t = closed_form_transform(p, 1.0);
    for (double u : {0.0, 0.3, 0.8, 1.0}) EXPECT_NEAR(t.value_u(u), p.value_u(1.0 - u), 1e-12);
}

TEST(ForwardTransform, QuadratureMatchesBochnerMultipliers)
{
    auto f = smooth_custom();
    for (double s : {0.1, 0.4, 0.75, 1.3, 1.8}) {
        auto t = forward_transform(f, s);
        auto o = oracle_forward(f, s);
        EXPECT_LT(max_grid_diff(t, o), 1e-9 * o.max_abs()) << s;
    }
}

TEST(ForwardTransform, SOneIsNodeExactShift)
{
    auto f = smooth_custom();
    auto t = forward_transform(f, 1.0);
    for (std::size_t j = 0; j < f.n(); ++j) EXPECT_EQ(t.values()[j], f.values()[(j + f.n() / 2) % f.n()]);
}

TEST(ForwardTransform, KernelsAgreeAboveOne)
{
    auto c2 = AngleFunction::builtin(Builtin::cos2);
    auto a = forward_transform(c2, 1.4, TransformKernel::subtracted);
    auto b = forward_transform(c2, 1.4, TransformKernel::simplified);
    EXPECT_LT(max_grid_diff(a, b), 1e-8);
    EXPECT_THROW(forward_transform(c2, 0.5, TransformKernel::simplified), BranchError);
}

TEST(ForwardTransform, Linearity)
{
    auto f = smooth_custom();
    auto g = AngleFunction::builtin(Builtin::cos4);
    const double s = 0.6;
    auto lhs = forward_transform(f.scaled(2.0).plus(g.scaled(-0.5)), s);
    auto rhs = forward_transform(f, s).scaled(2.0).plus(forward_transform(g, s).scaled(-0.5));
    EXPECT_LT(max_grid_diff(lhs, rhs), 1e-12 * rhs.max_abs());
}

TEST(ForwardTransform, PreservesEvenness)
{
    auto t = forward_transform(AngleFunction::builtin(Builtin::cos4), 0.4);
    EXPECT_TRUE(t.symmetric());
    for (double p : {0.1, 0.7, 1.3}) EXPECT_NEAR(t.eval(p), t.eval(-p), 1e-13);
}

TEST(ForwardTransform, RejectsLogBranch)
{
    EXPECT_THROW(forward_transform(AngleFunction::builtin(Builtin::cos2), 0.0), BranchError);
    EXPECT_THROW(forward_transform(AngleFunction::builtin(Builtin::cos2), 2.0), BranchError);
}

TEST(InverseTransform, ConstantAndRoundTrips)
{
    const double s = 0.4;
    auto cst = AngleFunction::builtin(Builtin::constant).scaled(specfun::c_s(s));
    EXPECT_LT(max_grid_diff(inverse_transform(cst, s), [](double) { return 1.0; }), 1e-10);
    auto c2 = AngleFunction::builtin(Builtin::cos2);
    EXPECT_LT(max_grid_diff(inverse_transform(forward_transform(c2, s), s), c2), 1e-6);
    auto f = smooth_custom();
    for (double s2 : {0.15, 0.5, 0.85}) {
        EXPECT_LT(max_grid_diff(inverse_transform(forward_transform(f, s2), s2), f), 1e-9) << s2;
        EXPECT_LT(max_grid_diff(forward_transform(inverse_transform(f, s2), s2), f), 1e-9) << s2;
    }
    EXPECT_THROW(inverse_transform(f, 1.2), BranchError);
}

TEST(InverseTransform, BumpAwayFromZeroGivesPositiveFunction)
{
    auto bump = AngleFunction::from_callable([](double t) {
        double d = std::remainder(t - pi / 2, pi) / 0.3;
        return std::abs(d) < 1 ? std::exp(-1.0 / (1 - d * d)) : 0.0;
    });
    auto o = inverse_transform(bump, 0.4);
    EXPECT_GT(o.min_value(), 0.0);
}

TEST(LogTransform, ConstantsAndMass)
{
    auto t = log_transform(AngleFunction::builtin(Builtin::constant).scaled(3.0));
    EXPECT_LT(max_grid_diff(t, [](double) { return 1.0 / (2 * pi); }), 1e-14);
    for (auto f : {AngleFunction::builtin(Builtin::cos4), smooth_custom()}) EXPECT_NEAR(log_transform(f).integral(), 1.0, 1e-12);
}

TEST(LogTransform, MatchesClosedFormsAndMultipliers)
{
    auto c4 = AngleFunction::builtin(Builtin::cos4);
    auto cf = closed_form_transform(builtin_poly(Builtin::cos4), 0.0);
    EXPECT_LT(max_grid_diff(log_transform(c4), [&](double p) { return cf.value(p); }), 1e-10);
    auto f = smooth_custom();
    auto c = f.coefficients();
    c[0] = 1.0 / (2 * pi);
    for (std::size_t m = 1; m < c.size(); ++m) c[m] *= ((m % 2) ? -1.0 : 1.0) * m / pi;
    EXPECT_LT(max_grid_diff(log_transform(f), AngleFunction::from_coefficients(c, f.n())), 1e-10);
}

TEST(LogTransform, InverseRoundTrip)
{
    auto omega = AngleFunction::builtin(Builtin::cos2).scaled(0.5).plus_constant(1.0);
    auto back = log_inverse_transform(log_transform(omega));
    auto target = omega.plus_constant(-omega.min_value());
    EXPECT_LT(max_grid_diff(back, target), 1e-5);
    EXPECT_NEAR(back.min_value(), 0.0, 1e-15);
    auto cst = AngleFunction::builtin(Builtin::constant).scaled(1.0 / (2 * pi));
    EXPECT_LT(log_inverse_transform(cst).max_abs(), 1e-12);
    EXPECT_THROW(log_inverse_transform(cst.scaled(2.0)), DomainError);
}

TEST(LogTransform, NarrowBumpInvertsToMinimumAtHalfPi)
{
    auto bump = AngleFunction::from_callable([](double t) {
        double d = std::remainder(t - pi / 2, pi) / 0.2;
        return std::abs(d) < 1 ? std::exp(-1.0 / (1 - d * d)) : 0.0;
    });
    auto unit = bump.scaled(1.0 / bump.integral());
    auto o = log_inverse_transform(unit);
    std::size_t arg = 0;
    for (std::size_t j = 0; j < o.n(); ++j) if (o.values()[j] < o.values()[arg]) arg = j;
    EXPECT_EQ(arg, o.n() / 2);
}

TEST(LogTransform, RegularisedFamilyConvergesAtRateS)
{
    auto omega = AngleFunction::builtin(Builtin::cos2).scaled(0.5).plus_constant(1.0);
    auto log_t = log_transform(omega);
    double prev = 1e300;
    for (double s : {0.04, 0.02, 0.01, 0.005}) {
        auto t = forward_transform(omega.plus_constant(1.0 / s), s);
        const double d = max_grid_diff(t, log_t) / log_t.max_abs();
        EXPECT_LT(d, prev);
        EXPECT_LT(d, 3.0 * s);
        prev = d;
    }
}

TEST(ForwardTransform, RuntimeOfGoldenSet)
{
    auto t0 = std::chrono::steady_clock::now();
    for (auto b : {Builtin::cos2, Builtin::cos4, Builtin::cos2sin2, Builtin::cos4_plus_tenth_cos2})
        (void)forward_transform(AngleFunction::builtin(b), 0.4);
    EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), 1.0);
}
