#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "radcine/encoding.hpp"
#include "radcine/errors.hpp"

namespace radcine {

namespace detail {

inline double cdot_real(const std::vector<cfloat>& a, const std::vector<cfloat>& b) {
    double s = 0;
    for (size_t i = 0; i < a.size(); ++i)
        s += static_cast<double>(a[i].real()) * b[i].real() +
             static_cast<double>(a[i].imag()) * b[i].imag();
    return s;
}

}  // namespace detail

// Iterative SENSE: plain CG on the normal equations AH A x = AH y from zero,
// stopped after n_iter iterations (early stopping is the regularizer). The
// recorded trace is the data residual ||A x_k - y|| / ||y||, which CG on the
// normal equations decreases monotonically (the 2-norm of the normal-
// equation residual itself is not monotone).
inline CineImage it_sense(const EncodingOp& op, const KSpaceData& y, int n_iter,
                          std::vector<float>* residuals = nullptr) {
    if (n_iter < 1) throw std::invalid_argument("it_sense: n_iter must be >= 1");
    CineImage b = apply_AH(op, y);
    CineImage x(op.nx, op.ny, op.nt);
    double norm_y = 0;
    for (const auto& v : y.data) norm_y += std::norm(std::complex<double>(v));
    norm_y = std::sqrt(norm_y);
    auto data_residual = [&](const CineImage& xi) {
        KSpaceData ax = apply_A(op, xi);
        double s = 0;
        for (size_t i = 0; i < ax.data.size(); ++i)
            s += std::norm(std::complex<double>(ax.data[i]) - std::complex<double>(y.data[i]));
        return static_cast<float>(std::sqrt(s) / (norm_y > 0 ? norm_y : 1));
    };
    std::vector<cfloat> r = b.data, p = b.data;
    double rs = detail::cdot_real(r, r);
    if (residuals) residuals->push_back(data_residual(x));
    for (int it = 0; it < n_iter && rs > 0; ++it) {
        CineImage pc(op.nx, op.ny, op.nt);
        pc.data = p;
        CineImage hp = apply_H(op, pc, 0.f);
        const double php = detail::cdot_real(p, hp.data);
        if (php <= 0) break;
        const float alpha = static_cast<float>(rs / php);
        for (size_t i = 0; i < x.data.size(); ++i) {
            x.data[i] += alpha * p[i];
            r[i] -= alpha * hp.data[i];
        }
        const double rs_new = detail::cdot_real(r, r);
        if (!std::isfinite(rs_new)) throw NumericalError("it_sense: NaN residual");
        if (residuals) residuals->push_back(data_residual(x));
        const float beta = static_cast<float>(rs_new / rs);
        for (size_t i = 0; i < p.size(); ++i) p[i] = r[i] + beta * p[i];
        rs = rs_new;
    }
    return x;
}

namespace detail {

// forward differences along x, y, t with zero at the trailing edge
inline void grad3(const CineImage& x, std::vector<cfloat>& dx, std::vector<cfloat>& dy,
                  std::vector<cfloat>& dt) {
    const int nx = x.nx, ny = x.ny, nt = x.nt;
    const size_t n = x.data.size();
    dx.assign(n, cfloat(0, 0));
    dy.assign(n, cfloat(0, 0));
    dt.assign(n, cfloat(0, 0));
    for (int ix = 0; ix < nx; ++ix)
        for (int iy = 0; iy < ny; ++iy)
            for (int it = 0; it < nt; ++it) {
                const size_t i = (static_cast<size_t>(ix) * ny + iy) * nt + it;
                if (ix + 1 < nx) dx[i] = x.at(ix + 1, iy, it) - x.data[i];
                if (iy + 1 < ny) dy[i] = x.at(ix, iy + 1, it) - x.data[i];
                if (it + 1 < nt) dt[i] = x.at(ix, iy, it + 1) - x.data[i];
            }
}

}  // namespace detail

// Smoothed isotropic spatio-temporal TV: sum_p sqrt(|dx|^2+|dy|^2+|dt|^2+eps^2).
inline double tv_value(const CineImage& x, double eps) {
    std::vector<cfloat> dx, dy, dt;
    detail::grad3(x, dx, dy, dt);
    double s = 0;
    for (size_t i = 0; i < dx.size(); ++i)
        s += std::sqrt(std::norm(std::complex<double>(dx[i])) +
                       std::norm(std::complex<double>(dy[i])) +
                       std::norm(std::complex<double>(dt[i])) + eps * eps);
    return s;
}

namespace detail {

inline void tv_gradient(const CineImage& x, double eps, CineImage& g) {
    const int nx = x.nx, ny = x.ny, nt = x.nt;
    std::vector<cfloat> dx, dy, dt;
    grad3(x, dx, dy, dt);
    std::vector<float> w(dx.size());
    for (size_t i = 0; i < dx.size(); ++i)
        w[i] = static_cast<float>(1.0 / std::sqrt(std::norm(std::complex<double>(dx[i])) +
                                                  std::norm(std::complex<double>(dy[i])) +
                                                  std::norm(std::complex<double>(dt[i])) +
                                                  eps * eps));
    g = CineImage(nx, ny, nt);
    // adjoint of the forward difference: g = -div(w * grad)
    for (int ix = 0; ix < nx; ++ix)
        for (int iy = 0; iy < ny; ++iy)
            for (int it = 0; it < nt; ++it) {
                const size_t i = (static_cast<size_t>(ix) * ny + iy) * nt + it;
                cfloat acc(0, 0);
                acc -= dx[i] * w[i] + dy[i] * w[i] + dt[i] * w[i];
                if (ix > 0) {
                    const size_t j = (static_cast<size_t>(ix - 1) * ny + iy) * nt + it;
                    acc += dx[j] * w[j];
                }
                if (iy > 0) {
                    const size_t j = (static_cast<size_t>(ix) * ny + (iy - 1)) * nt + it;
                    acc += dy[j] * w[j];
                }
                if (it > 0) {
                    const size_t j = (static_cast<size_t>(ix) * ny + iy) * nt + (it - 1);
                    acc += dt[j] * w[j];
                }
                g.data[i] = acc;
            }
}

}  // namespace detail

// TV-regularized reconstruction by gradient descent with Armijo backtracking
// on ||A x - y||^2 + lambda_tv * TV_eps(x). The objective is monotonically
// non-increasing by construction of the line search.
inline CineImage tv_reconstruct(const EncodingOp& op, const KSpaceData& y, float lambda_tv,
                                int n_iter, float eps = 1e-6f,
                                std::vector<double>* objective_trace = nullptr) {
    if (!(lambda_tv > 0.f)) throw std::invalid_argument("tv_reconstruct: lambda_tv must be > 0");
    if (!(eps > 0.f)) throw std::invalid_argument("tv_reconstruct: eps must be > 0");
    if (n_iter < 1) throw std::invalid_argument("tv_reconstruct: n_iter must be >= 1");

    auto data_term = [&](const CineImage& x) {
        KSpaceData ax = apply_A(op, x);
        double s = 0;
        for (size_t i = 0; i < ax.data.size(); ++i)
            s += std::norm(std::complex<double>(ax.data[i]) - std::complex<double>(y.data[i]));
        return s;
    };
    auto objective = [&](const CineImage& x) {
        return data_term(x) + static_cast<double>(lambda_tv) * tv_value(x, eps);
    };

    CineImage x = apply_A_sharp(op, y);  // warm start from the gridded recon
    double fx = objective(x);
    if (objective_trace) objective_trace->push_back(fx);
    double step = 1.0;
    for (int it = 0; it < n_iter; ++it) {
        // gradient: 2 AH (A x - y) + lambda_tv * tv_grad
        KSpaceData ax = apply_A(op, x);
        for (size_t i = 0; i < ax.data.size(); ++i) ax.data[i] -= y.data[i];
        CineImage g = apply_AH(op, ax);
        CineImage gtv;
        detail::tv_gradient(x, eps, gtv);
        double gnorm2 = 0;
        for (size_t i = 0; i < g.data.size(); ++i) {
            g.data[i] = 2.f * g.data[i] + lambda_tv * gtv.data[i];
            gnorm2 += std::norm(std::complex<double>(g.data[i]));
        }
        if (!std::isfinite(gnorm2)) throw NumericalError("tv_reconstruct: diverged (NaN gradient)");
        if (gnorm2 == 0) break;

        // Armijo backtracking
        bool accepted = false;
        for (int bt = 0; bt < 30; ++bt) {
            CineImage trial(op.nx, op.ny, op.nt);
            for (size_t i = 0; i < x.data.size(); ++i)
                trial.data[i] = x.data[i] - static_cast<float>(step) * g.data[i];
            const double ft = objective(trial);
            if (ft <= fx - 1e-4 * step * gnorm2) {
                x = std::move(trial);
                fx = ft;
                accepted = true;
                step *= 1.8;  // allow growth after a good step
                break;
            }
            step *= 0.5;
        }
        if (objective_trace) objective_trace->push_back(fx);
        if (!accepted) break;  // line search exhausted: stationary at this scale
    }
    return x;
}

}  // namespace radcine
