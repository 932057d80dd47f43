#include "medmeta/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace medmeta {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

class Problem {
public:
    Problem(const Objective& f, const Box& box, const MinimizeOptions& opt)
        : f_(f), box_(box), opt_(opt) {}

    double value(std::span<const double> x) {
        ++evaluations;
        const double v = f_(x);
        return std::isfinite(v) ? v : kInf;
    }

    double clamp(double v, std::size_t i) const {
        return std::clamp(v, box_.lower[i], box_.upper[i]);
    }

    // Central differences, one-sided where the box or an infinite value
    // blocks one side.
    std::vector<double> gradient(std::vector<double> x, double fx) {
        std::vector<double> g(x.size(), 0.0);
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double xi = x[i];
            const double h = opt_.fd_step * std::max(std::abs(xi), 1.0);
            const double hi = clamp(xi + h, i);
            const double lo = clamp(xi - h, i);
            x[i] = hi;
            const double fp = hi > xi ? value(x) : fx;
            x[i] = lo;
            const double fm = lo < xi ? value(x) : fx;
            x[i] = xi;
            if (std::isfinite(fp) && std::isfinite(fm) && hi > lo) {
                g[i] = (fp - fm) / (hi - lo);
            } else if (std::isfinite(fp) && hi > xi) {
                g[i] = (fp - fx) / (hi - xi);
            } else if (std::isfinite(fm) && lo < xi) {
                g[i] = (fx - fm) / (xi - lo);
            } else {
                g[i] = 0.0;
            }
        }
        return g;
    }

    int evaluations = 0;

private:
    const Objective& f_;
    const Box& box_;
    const MinimizeOptions& opt_;
};

void set_identity(std::vector<double>& h, std::size_t n, double scale = 1.0) {
    std::fill(h.begin(), h.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) h[i * n + i] = scale;
}

} // namespace

MinimizeResult minimize_box(const Objective& f, std::vector<double> x, const Box& box,
                            const MinimizeOptions& opt) {
    const std::size_t n = x.size();
    Problem problem(f, box, opt);
    for (std::size_t i = 0; i < n; ++i) x[i] = problem.clamp(x[i], i);

    MinimizeResult result;
    double fx = problem.value(x);
    if (!std::isfinite(fx)) {
        result.x = x;
        result.value = fx;
        result.evaluations = problem.evaluations;
        return result;
    }

    std::vector<double> h(n * n);
    set_identity(h, n);
    bool h_is_identity = true;
    std::vector<double> g = problem.gradient(x, fx);

    auto projected_gradient_norm = [&](const std::vector<double>& gx) {
        double m = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            m = std::max(m, std::abs(problem.clamp(x[i] - gx[i], i) - x[i]));
        }
        return m;
    };
    auto stationary = [&](const std::vector<double>& gx) {
        double scale = 1.0;
        for (double v : x) scale = std::max(scale, std::abs(v));
        return fx == 0.0 || projected_gradient_norm(gx) <= 1e-10 * scale;
    };

    int iter = 0;
    for (; iter < opt.max_iterations; ++iter) {
        if (stationary(g)) {
            result.converged = true;
            break;
        }

        // Variables pinned at a bound with the gradient pushing outward.
        std::vector<bool> free(n, true);
        for (std::size_t i = 0; i < n; ++i) {
            const double width = box.upper[i] - box.lower[i];
            const double eps = 1e-12 * std::max(width, 1.0);
            if ((x[i] <= box.lower[i] + eps && g[i] > 0.0) ||
                (x[i] >= box.upper[i] - eps && g[i] < 0.0)) {
                free[i] = false;
            }
        }

        std::vector<double> d(n, 0.0);
        auto build_direction = [&] {
            for (std::size_t i = 0; i < n; ++i) {
                if (!free[i]) continue;
                double s = 0.0;
                for (std::size_t j = 0; j < n; ++j) {
                    if (free[j]) s += h[i * n + j] * g[j];
                }
                d[i] = -s;
            }
        };
        build_direction();
        if (dot(g, d) >= 0.0) {
            set_identity(h, n);
            h_is_identity = true;
            build_direction();
        }
        if (dot(g, d) >= 0.0) {
            result.converged = true;
            break;
        }

        double t = 1.0;
        if (h_is_identity) {
            const double norm = std::sqrt(dot(d, d));
            t = std::min(1.0, 1.0 / norm);
        }

        std::vector<double> xn(n);
        double fn = kInf;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            bool moved = false;
            for (std::size_t i = 0; i < n; ++i) {
                xn[i] = problem.clamp(x[i] + t * d[i], i);
                moved = moved || xn[i] != x[i];
            }
            if (!moved) break;
            fn = problem.value(xn);
            double directional = 0.0;
            for (std::size_t i = 0; i < n; ++i) directional += g[i] * (xn[i] - x[i]);
            if (fn <= fx + 1e-4 * directional) {
                accepted = true;
                break;
            }
            t *= 0.5;
        }

        if (!accepted) {
            if (!h_is_identity) {
                set_identity(h, n);
                h_is_identity = true;
                continue;
            }
            double scale = 1.0;
            for (double v : x) scale = std::max(scale, std::abs(v));
            result.converged = fx == 0.0 || projected_gradient_norm(g) <= 1e-5 * scale;
            break;
        }

        const double reduction = fx - fn;
        const double denom = std::max(std::abs(fx), std::abs(fn));

        std::vector<double> s(n);
        for (std::size_t i = 0; i < n; ++i) s[i] = xn[i] - x[i];
        x = xn;
        fx = fn;

        if (fx == 0.0 || reduction <= opt.rel_tol * denom) {
            result.converged = true;
            ++iter;
            break;
        }

        std::vector<double> gn = problem.gradient(x, fx);
        std::vector<double> y(n);
        for (std::size_t i = 0; i < n; ++i) y[i] = gn[i] - g[i];
        const double sy = dot(s, y);
        const double yy = dot(y, y);
        if (sy > 1e-12 * std::sqrt(dot(s, s) * yy)) {
            if (h_is_identity) set_identity(h, n, sy / yy);
            // Inverse BFGS update: H <- (I - r s y') H (I - r y s') + r s s'
            const double r = 1.0 / sy;
            std::vector<double> hy(n, 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < n; ++j) hy[i] += h[i * n + j] * y[j];
            }
            const double yhy = dot(y, hy);
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < n; ++j) {
                    h[i * n + j] += (1.0 + r * yhy) * r * s[i] * s[j] -
                                    r * (hy[i] * s[j] + s[i] * hy[j]);
                }
            }
            h_is_identity = false;
        }
        g = std::move(gn);
    }

    result.x = x;
    result.value = fx;
    result.iterations = iter;
    result.evaluations = problem.evaluations;
    return result;
}

} // namespace medmeta
