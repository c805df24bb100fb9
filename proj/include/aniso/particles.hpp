#pragma once

#include "potential.hpp"
#include "rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <mutex>
#include <numeric>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace aniso::particles {

struct Vec2 {
    double x = 0.0, y = 0.0;
};

/** @brief W(x) from the spec's angle function. */
inline double eval_W(const PotentialSpec& spec, Vec2 d)
{
    const double r2 = d.x * d.x + d.y * d.y;
    if (!(r2 > 0.0)) throw NumericalError("particles", "W is singular at x = 0");
    const double om = spec.Omega.eval(std::atan2(d.y, d.x));
    if (spec.is_log()) return -0.5 * std::log(r2) + om + r2;
    return std::pow(r2, -0.5 * spec.s) * om + r2;
}

/** @brief ∇W = |x|^{-s-1}(-sΩ ê_r + Ω' ê_θ) + 2x, or |x|^{-1}(-ê_r + Ω' ê_θ) + 2x for log. */
inline Vec2 grad_W(const PotentialSpec& spec, Vec2 d)
{
    const double r2 = d.x * d.x + d.y * d.y;
    if (!(r2 > 0.0)) throw NumericalError("particles", "grad W is singular at x = 0");
    const double r = std::sqrt(r2);
    const double th = std::atan2(d.y, d.x);
    const double om = spec.Omega.eval(th), dom = spec.Omega.eval_derivative(th);
    const double er_x = d.x / r, er_y = d.y / r;
    const double radial = spec.is_log() ? -1.0 : -spec.s * om;
    const double pre = spec.is_log() ? 1.0 / r : std::pow(r, -spec.s - 1.0);
    return {pre * (radial * er_x - dom * er_y) + 2.0 * d.x, pre * (radial * er_y + dom * er_x) + 2.0 * d.y};
}

/**
 * @brief Pair kernel used by the N-body loop.
 *
 * Polynomial Ω are evaluated in u = x₁²/|x|² without trigonometry; other Ω
 * use a periodic cubic Hermite table whose derivative is used for the force,
 * so W and ∇W stay exactly consistent.
 */
class PairKernel {
public:
    explicit PairKernel(const PotentialSpec& spec, std::size_t table_size = 4096)
        : s_(spec.s), log_(spec.is_log())
    {
        if (spec.Omega.poly()) {
            poly_ = spec.Omega.poly()->p;
            if (poly_.empty()) poly_.push_back(0.0);
            return;
        }
        h_ = std::numbers::pi / static_cast<double>(table_size);
        f_.resize(table_size + 1);
        m_.resize(table_size + 1);
        for (std::size_t i = 0; i <= table_size; ++i) {
            const double t = h_ * static_cast<double>(i);
            f_[i] = spec.Omega.eval(t);
            m_[i] = spec.Omega.eval_derivative(t);
        }
        f_.back() = f_.front();
        m_.back() = m_.front();
    }

    /** @brief Returns W(d) and writes ∇W(d) to (gx, gy). */
    double eval(double dx, double dy, double& gx, double& gy) const
    {
        const double r2 = dx * dx + dy * dy;
        const double inv = 1.0 / r2;
        double om, a, b;
        if (!poly_.empty()) {
            const double u = dx * dx * inv;
            double p = 0.0, q = 0.0;
            for (std::size_t k = poly_.size(); k-- > 0;) {
                q = q * u + p;
                p = p * u + poly_[k];
            }
            om = p;
            const double c = 2.0 * q * dx * dy * inv;
            a = c * dy;
            b = -c * dx;
        } else {
            double dom;
            angular(std::atan2(dy, dx), om, dom);
            a = -dom * dy;
            b = dom * dx;
        }
        double w, rs;
        if (log_) {
            rs = 1.0;
            w = -0.5 * std::log(r2) + om + r2;
            gx = inv * (a - dx) + 2.0 * dx;
            gy = inv * (b - dy) + 2.0 * dy;
        } else {
            rs = std::exp(-0.5 * s_ * std::log(r2));
            w = rs * om + r2;
            const double k = rs * inv;
            gx = k * (a - s_ * om * dx) + 2.0 * dx;
            gy = k * (b - s_ * om * dy) + 2.0 * dy;
        }
        return w;
    }

    double value(double dx, double dy) const
    {
        double gx, gy;
        return eval(dx, dy, gx, gy);
    }

private:
    void angular(double theta, double& f, double& df) const
    {
        const std::size_t n = f_.size() - 1;
        double u = theta / h_;
        u -= std::floor(u / static_cast<double>(n)) * static_cast<double>(n);
        auto i = static_cast<std::size_t>(u);
        if (i >= n) i = n - 1;
        const double t = u - static_cast<double>(i);
        const double f0 = f_[i], f1 = f_[i + 1], m0 = m_[i] * h_, m1 = m_[i + 1] * h_;
        const double t2 = t * t, t3 = t2 * t;
        f = (2 * t3 - 3 * t2 + 1) * f0 + (t3 - 2 * t2 + t) * m0 + (-2 * t3 + 3 * t2) * f1 + (t3 - t2) * m1;
        df = ((6 * t2 - 6 * t) * (f0 - f1) + (3 * t2 - 4 * t + 1) * m0 + (3 * t2 - 2 * t) * m1) / h_;
    }

    double s_;
    bool log_;
    std::vector<double> poly_;
    double h_ = 0.0;
    std::vector<double> f_, m_;
};

struct ParticleEnsemble {
    std::vector<Vec2> positions;
    double energy = std::numeric_limits<double>::quiet_NaN();
    double step = 0.0;
    int step_count = 0;
    std::uint64_t rng_seed = 0;

    std::size_t N() const { return positions.size(); }
};

struct SimConfig {
    double energy_tol = 1e-5;
    int n_max = 20000;
    double dt0 = 1e-2;
    double dt_min = 1e-14;
    double dt_max = 0.05;
    double growth = 1.2;
    int max_halvings = 40;
    double min_distance = 1e-9;
    bool deterministic_reduction = true;
    unsigned threads = 0; ///< 0: ANISO_THREADS, else hardware concurrency
    std::uint64_t seed = 1;
};

inline void validate(const SimConfig& c)
{
    if (!(c.energy_tol > 0.0)) throw DomainError("particles", "energy_tol must be positive");
    if (c.n_max < 1) throw DomainError("particles", "n_max must be at least 1");
    if (!(c.dt0 > 0.0 && c.dt_max >= c.dt_min && c.dt_min > 0.0)) throw DomainError("particles", "need 0 < dt_min <= dt_max and dt0 > 0");
}

inline unsigned thread_count(unsigned requested)
{
    if (requested > 0) return requested;
    if (const char* env = std::getenv("ANISO_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/** @brief Move particles closer than @p threshold by 1e-6·uniform until none remain. */
inline void separate_coincident(std::vector<Vec2>& pts, rng::Xoshiro256& g, double threshold = 1e-9)
{
    const double t2 = threshold * threshold;
    for (bool again = true; again;) {
        again = false;
        for (std::size_t j = 0; j < pts.size(); ++j)
            for (std::size_t k = j + 1; k < pts.size(); ++k) {
                const double dx = pts[j].x - pts[k].x, dy = pts[j].y - pts[k].y;
                if (dx * dx + dy * dy < t2) {
                    pts[k].x += 1e-6 * g.uniform();
                    pts[k].y += 1e-6 * g.uniform();
                    again = true;
                }
            }
    }
}

/** @brief N i.i.d. uniform points on [-1/2,1/2]² (x then y per particle). */
inline ParticleEnsemble init_uniform(std::size_t N = 1600, std::uint64_t seed = 1)
{
    if (N == 0) throw DomainError("particles", "N must be positive");
    rng::Xoshiro256 g(seed);
    ParticleEnsemble e;
    e.rng_seed = seed;
    e.positions.resize(N);
    for (auto& p : e.positions) {
        p.x = g.uniform() - 0.5;
        p.y = g.uniform() - 0.5;
    }
    separate_coincident(e.positions, g);
    return e;
}

inline ParticleEnsemble from_positions(std::vector<Vec2> pts)
{
    ParticleEnsemble e;
    e.positions = std::move(pts);
    return e;
}

struct Evaluation {
    double energy = 0.0;
    double min_r2 = std::numeric_limits<double>::infinity();
    std::vector<Vec2> force; ///< -(1/N) Σ_k ∇W(x_j - x_k)
};

namespace detail {

struct Partial {
    double energy = 0.0;
    double min_r2 = std::numeric_limits<double>::infinity();
    std::vector<Vec2> acc;
};

inline void pair_rows(const PairKernel& K, const std::vector<Vec2>& x, std::size_t j0, std::size_t j1, Partial& out)
{
    const std::size_t N = x.size();
    out.acc.assign(N, Vec2{});
    double e = 0.0, mn = out.min_r2;
    for (std::size_t j = j0; j < j1; ++j) {
        const double xj = x[j].x, yj = x[j].y;
        double fx = 0.0, fy = 0.0;
        for (std::size_t k = j + 1; k < N; ++k) {
            const double dx = xj - x[k].x, dy = yj - x[k].y;
            mn = std::min(mn, dx * dx + dy * dy);
            double gx, gy;
            e += K.eval(dx, dy, gx, gy);
            fx -= gx;
            fy -= gy;
            out.acc[k].x += gx;
            out.acc[k].y += gy;
        }
        out.acc[j].x += fx;
        out.acc[j].y += fy;
    }
    out.energy = e;
    out.min_r2 = mn;
}

/** @brief Row ranges with equal numbers of unordered pairs. */
inline std::vector<std::size_t> row_split(std::size_t N, unsigned T)
{
    std::vector<std::size_t> cut{0};
    const double total = 0.5 * static_cast<double>(N) * static_cast<double>(N - 1);
    double acc = 0.0;
    unsigned part = 1;
    for (std::size_t j = 0; j < N && part < T; ++j) {
        acc += static_cast<double>(N - 1 - j);
        if (acc >= total * part / T) {
            cut.push_back(j + 1);
            ++part;
        }
    }
    while (cut.size() < T) cut.push_back(N);
    cut.push_back(N);
    return cut;
}

} // namespace detail

/**
 * @brief Energy 1/(2N²) Σ_{j≠k} W and forces over unordered pairs.
 *
 * Threads own contiguous row ranges and private accumulators. With
 * @p deterministic the partial sums are added in thread order, otherwise in
 * completion order.
 */
inline Evaluation evaluate(const PairKernel& K, const std::vector<Vec2>& x, unsigned threads = 1, bool deterministic = true)
{
    const std::size_t N = x.size();
    Evaluation ev;
    ev.force.assign(N, Vec2{});
    const unsigned T = static_cast<unsigned>(std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(1, N / 64)));
    std::vector<detail::Partial> parts(T);
    if (T == 1) {
        detail::pair_rows(K, x, 0, N, parts[0]);
    } else {
        const auto cut = detail::row_split(N, T);
        std::mutex mu;
        std::vector<std::size_t> order;
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < T; ++t)
            pool.emplace_back([&, t] {
                detail::pair_rows(K, x, cut[t], cut[t + 1], parts[t]);
                std::lock_guard<std::mutex> lk(mu);
                order.push_back(t);
            });
        for (auto& th : pool) th.join();
        if (!deterministic) {
            std::vector<detail::Partial> sorted;
            for (auto t : order) sorted.push_back(std::move(parts[t]));
            parts = std::move(sorted);
        }
    }
    const double invN = 1.0 / static_cast<double>(N);
    for (const auto& p : parts) {
        ev.energy += p.energy;
        ev.min_r2 = std::min(ev.min_r2, p.min_r2);
        for (std::size_t j = 0; j < N; ++j) {
            ev.force[j].x += p.acc[j].x;
            ev.force[j].y += p.acc[j].y;
        }
    }
    for (auto& f : ev.force) {
        f.x *= invN;
        f.y *= invN;
    }
    ev.energy *= invN * invN;
    return ev;
}

inline Evaluation evaluate(const PotentialSpec& spec, const std::vector<Vec2>& x, unsigned threads = 1)
{
    return evaluate(PairKernel(spec), x, threads, true);
}

enum class Termination { converged, max_steps, stalled };

inline std::string termination_name(Termination t)
{
    switch (t) {
    case Termination::converged: return "converged";
    case Termination::max_steps: return "max_steps";
    case Termination::stalled: return "stalled";
    }
    return "unknown";
}

struct SimResult {
    ParticleEnsemble ensemble;
    std::vector<double> energy_history; ///< energy after each accepted step, starting with the initial one
    Termination termination = Termination::max_steps;
    int rejected_steps = 0;
    std::string message;
};

/**
 * @brief Forward Euler for ẋ_j = -(1/N) Σ_k ∇W(x_j - x_k).
 *
 * A trial step is rejected when the energy increases or two particles come
 * closer than min_distance; dt is halved up to max_halvings times. Accepted
 * steps grow dt by `growth` up to dt_max.
 */
inline SimResult simulate(const PotentialSpec& spec, ParticleEnsemble ens, const SimConfig& cfg = {})
{
    validate(cfg);
    if (ens.N() < 2) throw DomainError("particles", "simulate needs at least two particles");
    const PairKernel K(spec);
    const unsigned T = thread_count(cfg.threads);
    auto eval = [&](const std::vector<Vec2>& x) { return evaluate(K, x, T, cfg.deterministic_reduction); };
    const double dmin2 = cfg.min_distance * cfg.min_distance;

    SimResult res;
    auto cur = eval(ens.positions);
    if (!(cur.min_r2 >= dmin2)) throw DomainError("particles", "initial particles closer than min_distance");
    ens.energy = cur.energy;
    res.energy_history.push_back(cur.energy);
    double dt = ens.step > 0.0 ? ens.step : cfg.dt0;
    std::vector<Vec2> trial(ens.N());
    while (true) {
        if (ens.step_count >= cfg.n_max) { res.termination = Termination::max_steps; break; }
        bool accepted = false;
        double h = std::min(dt, cfg.dt_max);
        for (int k = 0; k <= cfg.max_halvings && h >= cfg.dt_min; ++k, h *= 0.5) {
            for (std::size_t j = 0; j < ens.N(); ++j) {
                trial[j].x = ens.positions[j].x + h * cur.force[j].x;
                trial[j].y = ens.positions[j].y + h * cur.force[j].y;
            }
            auto next = eval(trial);
            if (next.min_r2 >= dmin2 && next.energy <= cur.energy && std::isfinite(next.energy)) {
                const double dE = cur.energy - next.energy;
                std::swap(ens.positions, trial);
                cur = std::move(next);
                ens.energy = cur.energy;
                ens.step = h;
                ++ens.step_count;
                res.energy_history.push_back(cur.energy);
                dt = std::min(h * cfg.growth, cfg.dt_max);
                accepted = true;
                if (std::abs(dE) < cfg.energy_tol) res.termination = Termination::converged;
                break;
            }
            ++res.rejected_steps;
        }
        if (!accepted) {
            res.termination = Termination::stalled;
            res.message = "no energy-decreasing step above dt_min=" + std::to_string(cfg.dt_min) + " after " +
                          std::to_string(ens.step_count) + " steps, energy " + std::to_string(cur.energy);
            break;
        }
        if (res.termination == Termination::converged) break;
    }
    res.ensemble = std::move(ens);
    return res;
}

inline Vec2 mean(const std::vector<Vec2>& pts)
{
    Vec2 m;
    for (const auto& p : pts) {
        m.x += p.x;
        m.y += p.y;
    }
    m.x /= static_cast<double>(pts.size());
    m.y /= static_cast<double>(pts.size());
    return m;
}

inline std::vector<Vec2> centered(const std::vector<Vec2>& pts)
{
    const Vec2 m = mean(pts);
    std::vector<Vec2> out(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) out[i] = {pts[i].x - m.x, pts[i].y - m.y};
    return out;
}

/** @brief Andrew's monotone chain, counter-clockwise without collinear points. */
inline std::vector<Vec2> convex_hull(std::vector<Vec2> pts)
{
    std::sort(pts.begin(), pts.end(), [](Vec2 a, Vec2 b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
    if (pts.size() < 3) return pts;
    auto cross = [](Vec2 o, Vec2 a, Vec2 b) { return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x); };
    std::vector<Vec2> h(2 * pts.size());
    std::size_t k = 0;
    for (const auto& p : pts) {
        while (k >= 2 && cross(h[k - 2], h[k - 1], p) <= 0) --k;
        h[k++] = p;
    }
    for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
        while (k >= t && cross(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
        h[k++] = pts[i];
    }
    h.resize(k - 1);
    return h;
}

/** @brief Median distance to the nearest neighbour. */
inline double median_spacing(const std::vector<Vec2>& pts)
{
    std::vector<double> nn(pts.size(), std::numeric_limits<double>::infinity());
    for (std::size_t j = 0; j < pts.size(); ++j)
        for (std::size_t k = j + 1; k < pts.size(); ++k) {
            const double d = std::hypot(pts[j].x - pts[k].x, pts[j].y - pts[k].y);
            nn[j] = std::min(nn[j], d);
            nn[k] = std::min(nn[k], d);
        }
    auto mid = nn.begin() + static_cast<std::ptrdiff_t>(nn.size() / 2);
    std::nth_element(nn.begin(), mid, nn.end());
    return *mid;
}

struct Segment {
    double angle = 0.0; ///< direction in (-π/2, π/2] from the x₁ axis
    std::size_t inliers = 0;
    double length = 0.0;
    Vec2 centre;
};

struct RansacOptions {
    double window = 6.0;    ///< neighbourhood radius in median spacings
    double tolerance = 0.3; ///< inlier distance in median spacings
    std::size_t min_inliers = 6;
    int trials = 64;
    double min_linearity = 8.0; ///< required ratio of principal standard deviations
    std::uint64_t seed = 7;
};

/**
 * @brief Greedy RANSAC: repeatedly take the best local line through two
 * nearby points, refit by principal axes, and remove its inliers.
 */
inline std::vector<Segment> fit_segments(const std::vector<Vec2>& pts, const RansacOptions& opt = {})
{
    std::vector<Segment> out;
    const std::size_t N = pts.size();
    if (N < opt.min_inliers) return out;
    const double h = median_spacing(pts);
    const double R = opt.window * h, tol = opt.tolerance * h;
    std::vector<std::vector<std::size_t>> nb(N);
    for (std::size_t j = 0; j < N; ++j)
        for (std::size_t k = 0; k < N; ++k)
            if (k != j && std::hypot(pts[j].x - pts[k].x, pts[j].y - pts[k].y) <= R) nb[j].push_back(k);
    std::vector<char> alive(N, 1);
    rng::Xoshiro256 g(opt.seed);
    auto pick = [&](std::size_t n) { return static_cast<std::size_t>(g.uniform() * static_cast<double>(n)); };
    std::size_t failures = 0;
    while (failures < 4 * N) {
        std::vector<std::size_t> live;
        for (std::size_t i = 0; i < N; ++i)
            if (alive[i]) live.push_back(i);
        if (live.size() < opt.min_inliers) break;
        const std::size_t p = live[pick(live.size())];
        std::vector<std::size_t> cand{p};
        for (auto k : nb[p])
            if (alive[k]) cand.push_back(k);
        if (cand.size() < opt.min_inliers) {
            alive[p] = 0;
            continue;
        }
        std::vector<std::size_t> best;
        for (int t = 0; t < opt.trials; ++t) {
            const std::size_t q = cand[1 + pick(cand.size() - 1)];
            const double ux = pts[q].x - pts[p].x, uy = pts[q].y - pts[p].y, L = std::hypot(ux, uy);
            std::vector<std::size_t> in;
            for (auto k : cand) {
                const double dx = pts[k].x - pts[p].x, dy = pts[k].y - pts[p].y;
                if (std::abs(dx * uy - dy * ux) / L <= tol) in.push_back(k);
            }
            if (in.size() > best.size()) best = std::move(in);
        }
        if (best.size() < opt.min_inliers) {
            ++failures;
            continue;
        }
        Vec2 c;
        for (auto k : best) {
            c.x += pts[k].x;
            c.y += pts[k].y;
        }
        c.x /= static_cast<double>(best.size());
        c.y /= static_cast<double>(best.size());
        double sxx = 0, syy = 0, sxy = 0;
        for (auto k : best) {
            const double dx = pts[k].x - c.x, dy = pts[k].y - c.y;
            sxx += dx * dx;
            syy += dy * dy;
            sxy += dx * dy;
        }
        const double tr = sxx + syy, det = sxx * syy - sxy * sxy;
        const double disc = std::sqrt(std::max(0.0, 0.25 * tr * tr - det));
        const double l1 = 0.5 * tr + disc, l2 = std::max(0.0, 0.5 * tr - disc);
        if (l1 < opt.min_linearity * opt.min_linearity * l2) {
            ++failures;
            continue;
        }
        double ang = 0.5 * std::atan2(2.0 * sxy, sxx - syy);
        if (ang <= -std::numbers::pi / 2) ang += std::numbers::pi;
        Segment sgm;
        sgm.angle = ang;
        sgm.inliers = best.size();
        sgm.length = std::sqrt(12.0 * l1 / static_cast<double>(best.size()));
        sgm.centre = c;
        out.push_back(sgm);
        for (auto k : best) alive[k] = 0;
        failures = 0;
    }
    return out;
}

struct Diagnostics {
    double width = 0.0;          ///< max |x₁| after centering
    double height = 0.0;         ///< max |x₂| after centering
    double support_radius = 0.0; ///< max |x| after centering
    double support_bound = std::numeric_limits<double>::quiet_NaN(); ///< 3√(V₁/2), 0 ≤ s < 1
    std::vector<double> fitted_segment_slopes;
};

inline Diagnostics diagnostics(const std::vector<Vec2>& pts, double s, bool fit = true, const RansacOptions& opt = {})
{
    if (pts.empty()) throw DomainError("particles", "diagnostics needs a nonempty ensemble");
    Diagnostics d;
    for (const auto& p : centered(pts)) {
        d.width = std::max(d.width, std::abs(p.x));
        d.height = std::max(d.height, std::abs(p.y));
        d.support_radius = std::max(d.support_radius, std::hypot(p.x, p.y));
    }
    const auto pc = specfun::profile_constants(s);
    if (pc.has_1d) d.support_bound = 3.0 * std::sqrt(pc.V1 / 2.0);
    if (fit)
        for (const auto& sg : fit_segments(pts, opt)) d.fitted_segment_slopes.push_back(sg.angle);
    return d;
}

} // namespace aniso::particles
