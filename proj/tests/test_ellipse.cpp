#include <aniso/ellipse.hpp>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>

using namespace aniso;
using namespace aniso::ellipse;

namespace {

constexpr double pi = std::numbers::pi;

PotentialSpec param(Builtin b, double alpha, double s = 0.4, std::size_t n = 256)
{
    return make_parametrized_spec(s, AngleFunction::builtin(b, n), alpha, builtin_name(b));
}

PotentialSpec isotropic(double s) { return make_direct_spec(s, AngleFunction::builtin(Builtin::constant, 64)); }

/** Adaptive Gauss-Kronrod evaluation of the coefficient integrals. */
QuadCoeffs oracle_coeffs(const PotentialSpec& spec, double a, double b, double eta)
{
    boost::math::quadrature::gauss_kronrod<double, 31> gk;
    const double s = spec.s, p = 0.5 * (2.0 + s);
    auto I = [&](int which) {
        auto f = [&](double phi) {
            const double c = std::cos(phi), sn = std::sin(phi);
            const double w = which == 0 ? c * c : which == 1 ? sn * sn : c * sn;
            return std::pow(a * a * c * c + b * b * sn * sn, -p) * w * spec.Omega_tilde.eval(phi + eta);
        };
        double acc = 0.0;
        for (double lo : {-pi, -pi / 2, 0.0, pi / 2}) acc += gk.integrate(f, lo, lo + pi / 2, 12, 1e-13);
        return acc;
    };
    const double K = coefficient_scale(s);
    return {K * I(0), K * I(1), K * I(2)};
}

PotentialSpec vertical_segment_spec(double s)
{
    auto t = AngleFunction::from_callable([](double phi) { return std::pow(std::sin(phi), 4); }, 256);
    return make_direct_spec(s, inverse_transform(t, s), "custom");
}

PotentialSpec shifted_cos2(double shift, double alpha = 0.4)
{
    auto om = AngleFunction::from_callable([=](double t) { return 1.0 + alpha * std::pow(std::cos(t - shift), 2); }, 256);
    return make_direct_spec(0.4, om);
}

} // namespace

TEST(QuadCoeffs, IsotropicBall)
{
    for (double s : {0.2, 0.4, 0.7, 1.0, 1.4, 1.8}) {
        const auto c = quad_coeffs(isotropic(s), 1.0, 1.0);
        EXPECT_NEAR(c.A, 1.0, 1e-10) << s;
        EXPECT_NEAR(c.B, 1.0, 1e-10) << s;
        EXPECT_NEAR(c.D, 0.0, 1e-12) << s;
    }
    const double r = 1.0 / std::sqrt(2.0);
    const auto c = quad_coeffs(make_direct_spec(0.0, AngleFunction::builtin(Builtin::constant, 64)), r, r);
    EXPECT_NEAR(c.A, 1.0, 1e-12);
    EXPECT_NEAR(c.B, 1.0, 1e-12);
}

TEST(QuadCoeffs, MatchesAdaptiveQuadrature)
{
    const auto spec = shifted_cos2(0.3);
    for (auto [a, b] : {std::pair{1.0, 1.3}, {0.7, 2.0}, {1.0, 0.01}, {0.003, 1.0}, {2.0, 0.2}}) {
        for (double eta : {0.0, 0.4}) {
            const auto c = quad_coeffs(spec, a, b, eta);
            const auto o = oracle_coeffs(spec, a, b, eta);
            const double scale = std::max({std::abs(o.A), std::abs(o.B), 1.0});
            EXPECT_NEAR(c.A, o.A, 1e-10 * scale) << a << " " << b;
            EXPECT_NEAR(c.B, o.B, 1e-10 * scale) << a << " " << b;
            EXPECT_NEAR(c.D, o.D, 1e-10 * scale) << a << " " << b;
        }
    }
}

TEST(QuadCoeffs, GridRefinementConsistent)
{
    for (auto [a, b] : {std::pair{1.0, 1.0}, {0.6, 1.5}, {1.0, 0.05}}) {
        const auto c1 = quad_coeffs(param(Builtin::cos4, 0.5, 0.4, 256), a, b);
        const auto c2 = quad_coeffs(param(Builtin::cos4, 0.5, 0.4, 512), a, b);
        EXPECT_NEAR(c1.A, c2.A, 1e-10);
        EXPECT_NEAR(c1.B, c2.B, 1e-10);
    }
}

TEST(QuadCoeffs, Homogeneity)
{
    for (double s : {0.0, 0.4, 1.4}) {
        const auto spec = param(Builtin::cos2, 0.3, s);
        const double k = s == 0.0 ? 2.0 : 2.0 + s;
        for (auto [a, b] : {std::pair{0.7, 1.1}, {1.0, 0.02}}) {
            const auto c1 = quad_coeffs(spec, a, b, 0.2);
            const auto c2 = quad_coeffs(spec, 2 * a, 2 * b, 0.2);
            EXPECT_NEAR(c2.A, std::pow(2.0, -k) * c1.A, 1e-10 * std::abs(c1.A));
            EXPECT_NEAR(c2.B, std::pow(2.0, -k) * c1.B, 1e-10 * std::abs(c1.B));
            EXPECT_NEAR(c2.D, std::pow(2.0, -k) * c1.D, 1e-10 * std::max(1.0, std::abs(c1.D)));
        }
    }
}

TEST(QuadCoeffs, SymmetricHasNoCrossTerm)
{
    for (auto b : {Builtin::cos2, Builtin::cos4, Builtin::cos4_plus_tenth_cos2})
        EXPECT_NEAR(quad_coeffs(param(b, 0.4), 0.8, 1.7).D, 0.0, 1e-13);
}

TEST(QuadCoeffs, DegenerateDivergence)
{
    try {
        quad_coeffs(isotropic(0.4), 0.0, 1.0);
        FAIL();
    } catch (const DivergenceError& e) {
        EXPECT_NE(std::string(e.what()).find("coefficient A"), std::string::npos);
    }
    try {
        quad_coeffs(isotropic(0.4), 1.0, 0.0);
        FAIL();
    } catch (const DivergenceError& e) {
        EXPECT_NE(std::string(e.what()).find("coefficient B"), std::string::npos);
    }
    EXPECT_THROW(quad_coeffs(isotropic(0.4), 0.0, 0.0), DomainError);
}

TEST(QuadCoeffs, DegenerateFiniteMatchesLimit)
{
    const auto spec = param(Builtin::cos2, 2.0 / 3.0);
    const auto c0 = quad_coeffs(spec, 0.0, 1.0);
    const auto c1 = quad_coeffs(spec, 1e-7, 1.0);
    EXPECT_NEAR(c0.B, c1.B, 1e-5 * c0.B);
    EXPECT_NEAR(c0.A, c1.A, 1e-4 * c0.A);
    EXPECT_NEAR(c0.A / c0.B, 1.0 / (1.0 - 0.4), 1e-6);
}

TEST(QuadCoeffsHighS, AgreesWithTransformFormula)
{
    for (double s : {1.0, 1.2, 1.4, 1.8}) {
        const auto spec = make_direct_spec(s, AngleFunction::from_poly(CosPoly{{1.0, 0.5}}, 256));
        for (auto [a, b] : {std::pair{1.0, 1.0}, {0.7, 1.6}, {1.5, 0.4}, {1.0, 0.05}}) {
            const auto h = quad_coeffs_high_s(spec, a, b);
            const auto c = quad_coeffs(spec, a, b);
            EXPECT_NEAR(h.A, c.A, 1e-6 * std::max(1.0, c.A)) << s << " " << a << " " << b;
            EXPECT_NEAR(h.B, c.B, 1e-6 * std::max(1.0, c.B)) << s << " " << a << " " << b;
        }
    }
    const auto h = quad_coeffs_high_s(isotropic(1.4), 1.0, 1.0);
    EXPECT_NEAR(h.A, 1.0, 1e-12);
    EXPECT_NEAR(h.B, 1.0, 1e-12);
    const auto h1 = quad_coeffs_high_s(isotropic(1.0), 1.0, 1.0);
    EXPECT_NEAR(h1.A, 1.0, 1e-12);
    EXPECT_TRUE(std::isfinite(h1.B));
}

TEST(QuadCoeffsHighS, Errors)
{
    EXPECT_THROW(quad_coeffs_high_s(isotropic(0.4), 1.0, 1.0), BranchError);
    auto asym = AngleFunction::from_callable([](double t) { return 1.0 + 0.3 * std::pow(std::cos(t - 0.3), 2); }, 256);
    EXPECT_THROW(quad_coeffs_high_s(make_direct_spec(1.4, asym), 1.0, 1.0), DomainError);
}

TEST(Jacobian, NegativeDefinite)
{
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const Builtin kinds[] = {Builtin::cos2, Builtin::cos4, Builtin::cos2sin2, Builtin::cos4_plus_tenth_cos2};
    for (int trial = 0; trial < 10; ++trial) {
        const double s = 0.1 + 0.8 * u(rng);
        auto spec = param(kinds[trial % 4], 0.0, s);
        const double aL = regimes::critical_alphas(spec).alpha_L;
        spec = spec.with_alpha(0.9 * aL * u(rng));
        const double a = 0.5 + 1.5 * u(rng), b = 0.5 + 1.5 * u(rng);
        const double h = 1e-6;
        const auto c = quad_coeffs(spec, a, b), ca = quad_coeffs(spec, a + h, b), cb = quad_coeffs(spec, a, b + h);
        Eigen::Matrix2d J;
        J << (ca.A - c.A) / h, (cb.A - c.A) / h, (ca.B - c.B) / h, (cb.B - c.B) / h;
        Eigen::EigenSolver<Eigen::Matrix2d> es(J);
        for (int i = 0; i < 2; ++i) EXPECT_LT(es.eigenvalues()(i).real(), 0.0) << trial;
    }
}

TEST(Solve, IsotropicBall)
{
    for (double s : {0.2, 0.4, 0.8, 1.0, 1.5}) {
        const auto sol = solve_ellipse(isotropic(s));
        EXPECT_NEAR(sol.params.a, 1.0, 1e-10) << s;
        EXPECT_NEAR(sol.params.b, 1.0, 1e-10) << s;
        EXPECT_EQ(sol.params.eta, 0.0);
        EXPECT_FALSE(sol.params.degenerate);
    }
    const auto sol = solve_ellipse(make_direct_spec(0.0, AngleFunction::builtin(Builtin::constant, 64)));
    EXPECT_NEAR(sol.params.a, 1.0 / std::sqrt(2.0), 1e-10);
    EXPECT_NEAR(sol.params.b, 1.0 / std::sqrt(2.0), 1e-10);
}

TEST(Solve, ElongatedAlongVerticalAxis)
{
    const auto sol = solve_ellipse(param(Builtin::cos2, 0.5));
    EXPECT_GT(sol.params.b, sol.params.a);
    EXPECT_GT(sol.params.a, 0.0);
    EXPECT_EQ(sol.params.eta, 0.0);
    EXPECT_NEAR(sol.coeffs.A, 1.0, 1e-9);
    EXPECT_NEAR(sol.coeffs.B, 1.0, 1e-9);
    EXPECT_LT(sol.residual, 1e-9);
}

TEST(Solve, ProperEllipseAtCriticalAlpha)
{
    const auto sol = solve_ellipse(param(Builtin::cos2, 2.0 / 3.0));
    EXPECT_FALSE(sol.params.degenerate);
    EXPECT_GT(sol.params.a, 1e-3);
    EXPECT_NEAR(sol.coeffs.A, 1.0, 1e-9);
    EXPECT_NEAR(sol.coeffs.B, 1.0, 1e-9);
}

TEST(Solve, LogAndHighS)
{
    for (double s : {0.0, 1.3}) {
        const auto sol = solve_ellipse(param(Builtin::cos4, 0.5, s));
        EXPECT_LT(sol.residual, 1e-9) << s;
        EXPECT_GT(sol.params.b, sol.params.a) << s;
    }
}

TEST(Solve, ExchangeSymmetry)
{
    const auto sol = solve_ellipse(param(Builtin::cos2sin2, 1.0));
    EXPECT_LT(std::abs(sol.params.a - sol.params.b), 1e-8);
}

TEST(Solve, RejectsNonLic)
{
    EXPECT_THROW(solve_ellipse(param(Builtin::cos2, 0.8)), RegimeError);
}

TEST(Solve, DegenerateVerticalSegment)
{
    const auto sol = solve_ellipse(vertical_segment_spec(0.4));
    ASSERT_TRUE(sol.params.degenerate);
    EXPECT_EQ(sol.params.a, 0.0);
    EXPECT_NEAR(sol.coeffs.B, 1.0, 1e-9);
    EXPECT_GE(sol.coeffs.A, 0.0);
    EXPECT_LE(sol.coeffs.A, 1.0);
    EXPECT_NEAR(sol.coeffs.A, 1.0 / (3.0 - 0.4), 1e-6);
    EXPECT_NEAR(sol.coeffs.D, 0.0, 1e-10);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 2 * pi);
    for (int i = 0; i < 100; ++i) {
        const double t = u(rng), x = std::cos(t), y = std::sin(t);
        const double q = sol.coeffs.A * x * x + sol.coeffs.B * y * y + 2 * sol.coeffs.D * x * y;
        EXPECT_GE(q, -1e-12);
        EXPECT_LE(q, 1.0 + 1e-9);
    }
}

TEST(Solve, AsymmetricRotation)
{
    const auto ref = solve_ellipse(param(Builtin::cos2, 0.4));
    const auto sol = solve_ellipse(shifted_cos2(0.5));
    EXPECT_NEAR(sol.params.eta, 0.5, 1e-8);
    EXPECT_NEAR(sol.params.a, ref.params.a, 1e-8);
    EXPECT_NEAR(sol.params.b, ref.params.b, 1e-8);
    EXPECT_LT(sol.residual, 1e-9);
}

TEST(Solve, RotationEquivariance)
{
    const auto base = solve_ellipse(shifted_cos2(0.5));
    const double eta0 = 0.2;
    const auto rot = solve_ellipse(shifted_cos2(0.5 - eta0));
    const double expect = std::fmod(base.params.eta - eta0 + pi, pi / 2);
    EXPECT_NEAR(rot.params.eta, expect, 1e-8);
    EXPECT_NEAR(rot.params.a, base.params.a, 1e-8);
    EXPECT_NEAR(rot.params.b, base.params.b, 1e-8);
    const auto same = solve_ellipse(shifted_cos2(1.4));
    EXPECT_NEAR(same.params.eta, 1.4, 1e-8);
    EXPECT_NEAR(same.params.a, base.params.a, 1e-8);
    const auto swapped = solve_ellipse(shifted_cos2(1.9));
    EXPECT_NEAR(swapped.params.eta, 1.9 - pi / 2, 1e-8);
    EXPECT_NEAR(swapped.params.a, base.params.b, 1e-8);
    EXPECT_NEAR(swapped.params.b, base.params.a, 1e-8);
}

namespace {

/** (W_rep + A y1² + B y2² + 2D y1y2) * ρ_{a,b} at the centre, by 2D quadrature in scaled polar coordinates. */
double centre_value(const PotentialSpec& spec, const EllipseParams& p)
{
    const auto c = quad_coeffs(spec, p.a, p.b, p.eta);
    const auto pc = specfun::profile_constants(spec.s);
    const double R = support_scale(spec.s);
    boost::math::quadrature::tanh_sinh<double> ts;
    boost::math::quadrature::gauss_kronrod<double, 61> gk;
    auto at_angle = [&](double t) {
        const double ct = std::cos(t), st = std::sin(t);
        const double y1 = p.a * ct, y2 = p.b * st;
        const double th = std::atan2(y2, y1);
        const double q = y1 * y1 + y2 * y2;
        const double om = spec.Omega.eval(th + p.eta);
        const double quad = c.A * y1 * y1 + c.B * y2 * y2 + 2 * c.D * y1 * y2;
        if (spec.s == 0.0) {
            auto f = [&](double r) { return (-std::log(r) - 0.5 * std::log(q) + om + r * r * quad) * r / pi; };
            return ts.integrate(f, 0.0, 1.0);
        }
        auto f = [&](double r) {
            return (std::pow(r, -spec.s) * std::pow(q, -0.5 * spec.s) * om + r * r * quad) * specfun::eval_rho2(pc, r, 0.0) * r;
        };
        return ts.integrate(f, 0.0, R);
    };
    return gk.integrate(at_angle, 0.0, 2 * pi, 8, 1e-11);
}

} // namespace

TEST(PotentialConstant, IsotropicRiesz)
{
    const auto spec = isotropic(0.4);
    EXPECT_NEAR(potential_constant(spec, {1.0, 1.0, 0.0, false}), centre_value(spec, {1.0, 1.0, 0.0, false}), 1e-6);
}

TEST(PotentialConstant, MatchesCentreConvolution)
{
    const auto s1 = param(Builtin::cos4, 0.5);
    EllipseParams p{0.8, 1.3, 0.0, false};
    EXPECT_NEAR(potential_constant(s1, p), centre_value(s1, p), 1e-5);
    const auto s2 = shifted_cos2(0.3);
    EllipseParams q{0.9, 1.2, 0.25, false};
    EXPECT_NEAR(potential_constant(s2, q), centre_value(s2, q), 1e-5);
}

TEST(PotentialConstant, LogCase)
{
    for (auto spec : {make_direct_spec(0.0, AngleFunction::builtin(Builtin::constant, 64)), param(Builtin::cos2, 0.3, 0.0),
                      param(Builtin::cos4, 0.7, 0.0)}) {
        for (EllipseParams p : {EllipseParams{0.7, 0.7, 0.0, false}, EllipseParams{0.5, 0.9, 0.0, false}, EllipseParams{1.1, 0.6, 0.3, false}})
            EXPECT_NEAR(potential_constant(spec, p), centre_value(spec, p), 1e-6);
    }
}

TEST(PotentialConstant, Scaling)
{
    const auto spec = param(Builtin::cos2, 0.4);
    const double lam = 1.7;
    const double c1 = potential_constant(spec, {0.8, 1.3, 0.0, false});
    const double c2 = potential_constant(spec, {lam * 0.8, lam * 1.3, 0.0, false});
    EXPECT_NEAR(c2, std::pow(lam, -0.4) * c1, 1e-12);
}

TEST(Projection, Radii)
{
    const auto spec = isotropic(0.4);
    const auto pc = specfun::profile_constants(0.4);
    for (double phi : {0.0, 0.7, 2.0}) EXPECT_NEAR(project_ellipse(spec, {1, 1, 0, false}, phi), pc.R1 / pc.R2, 1e-14);
    EXPECT_NEAR(project_ellipse(spec, {0.6, 1.4, 0, false}, 0.0), pc.R1 / (0.6 * pc.R2), 1e-14);
    const double phi = 0.9;
    EXPECT_NEAR(project_ellipse(spec, {0.6, 1.4, 0, false}, phi),
                pc.R1 / (pc.R2 * std::sqrt(0.36 * std::cos(phi) * std::cos(phi) + 1.96 * std::sin(phi) * std::sin(phi))), 1e-14);
    EXPECT_THROW(project_ellipse(isotropic(1.4), {1, 1, 0, false}, 0.0), BranchError);
}

TEST(Projection, MatchesPushforwardQuadrature)
{
    const double s = 0.4;
    const auto spec = isotropic(s);
    const auto pc = specfun::profile_constants(s);
    EllipseParams p{0.6, 1.4, 0.3, false};
    const double phi = 0.5;
    const double lam = project_ellipse(spec, p, phi);
    const double x = 0.3 / lam;
    boost::math::quadrature::tanh_sinh<double> ts;
    const double ct = std::cos(phi - p.eta), st = std::sin(phi - p.eta);
    // points with projection x: y = x e + t e_perp in the rotated frame
    auto rho = [&](double t) {
        const double u1 = x * ct - t * st, u2 = x * st + t * ct;
        return specfun::eval_rho2(pc, u1 / p.a, u2 / p.b) / (p.a * p.b);
    };
    const double qa = st * st / (p.a * p.a) + ct * ct / (p.b * p.b);
    const double qb = x * ct * (-st) / (p.a * p.a) + x * st * ct / (p.b * p.b);
    const double qc = x * x * (ct * ct / (p.a * p.a) + st * st / (p.b * p.b)) - pc.R2 * pc.R2;
    const double disc = std::sqrt(qb * qb - qa * qc);
    const double val = ts.integrate(rho, (-qb - disc) / qa, (-qb + disc) / qa);
    EXPECT_NEAR(val, lam * specfun::eval_rho1(pc, lam * x), 1e-6);
}

TEST(Boundary, Polyline)
{
    const auto spec = isotropic(0.4);
    const auto pts = boundary_polyline(spec, {0.5, 2.0, 0.3, false}, 64);
    ASSERT_EQ(pts.size(), 64u);
    const double R = support_scale(0.4);
    for (auto [x, y] : pts) {
        const double u = std::cos(0.3) * x + std::sin(0.3) * y, v = -std::sin(0.3) * x + std::cos(0.3) * y;
        EXPECT_NEAR(u * u / (0.25 * R * R) + v * v / (4.0 * R * R), 1.0, 1e-12);
    }
}
