#pragma once

// Plug-in asymptotic inference for the estimated optimal cutoff: the gradient
// of the estimating equation in the stacked unconstrained parameters, the
// delta-method variance, Wald intervals, and the population (expected)
// information used for theoretical-variance baselines.

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include "rocsmsn/cutoff.hpp"
#include "rocsmsn/distributions.hpp"
#include "rocsmsn/mle.hpp"
#include "rocsmsn/numerics.hpp"

namespace rocsmsn {

// z-quantile for a two-sided level-(1-alpha) interval.  The default level is
// pinned to its 15-digit constant so reported intervals are bit-reproducible.
inline double wald_z(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw std::domain_error("wald_z: alpha outside (0,1)");
    }
    if (alpha == 0.05) return 1.959963984540054;
    return norm_quantile(1.0 - 0.5 * alpha);
}

inline std::pair<double, double> wald_ci(double c_hat, double se, double alpha = 0.05) {
    const double z = wald_z(alpha);
    return {c_hat - z * se, c_hat + z * se};
}

// Gradient of phi(c, theta) in the stacked unconstrained coordinates
// (theta0, theta1): the first block is -lambda0 pi0 times the gradient of
// f0(c), the second +lambda1 pi1 times the gradient of f1(c), each by
// Richardson differences of the density in the parameters.
inline Eigen::VectorXd grad_phi_in_theta(const ThetaPair& theta,
                                         const DecisionConfig& cfg, double c) {
    cfg.validate();
    const int p0 = theta.d0.n_params();
    const int p1 = theta.d1.n_params();
    Eigen::VectorXd out(p0 + p1);

    const auto fill = [&](const DistSpec& spec, double weight, int offset) {
        const auto t0 = to_unconstrained(spec);
        const auto grad = richardson_gradient(
            [&](const std::vector<double>& t) {
                return pdf(from_unconstrained(spec.family, t), c);
            },
            t0);
        for (std::size_t j = 0; j < grad.size(); ++j) {
            out[offset + static_cast<int>(j)] = weight * grad[j];
        }
    };
    fill(theta.d0, -cfg.lambda0 * cfg.pi0, 0);
    fill(theta.d1, cfg.lambda1 * cfg.pi1, p0);
    return out;
}

struct CutoffInference {
    double v_hat = 0.0;  // asymptotic variance of sqrt(n) (c_hat - c*)
    double se = 0.0;
    double ci_lo = 0.0, ci_hi = 0.0;
    Eigen::VectorXd grad_phi_theta;
    double dphi_dc = 0.0;  // signed slope of phi in c at (c_hat, theta_hat)
    bool low_identifiability = false;  // |dphi_dc| at or below the 1e-3 filter
    double alpha = 0.05;
};

inline CutoffInference variance_plugin(const ThetaPair& theta,
                                       const DecisionConfig& cfg, double c_hat,
                                       const JointCovariance& sigma,
                                       double alpha = 0.05) {
    cfg.validate();
    if (sigma.sigma.rows() != sigma.p0 + sigma.p1 ||
        sigma.p0 != theta.d0.n_params() || sigma.p1 != theta.d1.n_params()) {
        throw std::invalid_argument("variance_plugin: covariance dimensions do not match theta");
    }
    CutoffInference out;
    out.alpha = alpha;
    auto f = [&](double c) { return phi(theta, cfg, c); };
    out.dphi_dc = richardson_derivative(f, c_hat, 1e-4 * (1.0 + std::fabs(c_hat)));
    if (out.dphi_dc == 0.0) {
        throw std::runtime_error("variance_plugin: flat estimating equation at c_hat");
    }
    out.low_identifiability = std::fabs(out.dphi_dc) <= 1e-3;
    out.grad_phi_theta = grad_phi_in_theta(theta, cfg, c_hat);
    out.v_hat = out.grad_phi_theta.dot(sigma.sigma * out.grad_phi_theta) /
                (out.dphi_dc * out.dphi_dc);
    if (!std::isfinite(out.v_hat) || out.v_hat < 0.0) {
        throw std::runtime_error("variance_plugin: non-finite variance");
    }
    out.se = std::sqrt(out.v_hat / static_cast<double>(sigma.n));
    std::tie(out.ci_lo, out.ci_hi) = wald_ci(c_hat, out.se, alpha);
    return out;
}

// ---------------------------------------------------------------------------
// Population information (quadrature), for theoretical-variance baselines
// ---------------------------------------------------------------------------

// Expected (Fisher) information per observation in the unconstrained chart,
// computed as the integral of the score outer product against the density.
// Scores come from Richardson gradients of log f; quadrature nodes are cached
// so the p(p+1)/2 entry integrals share score evaluations.
inline Eigen::MatrixXd expected_information(const DistSpec& spec) {
    spec.validate();
    const auto theta = to_unconstrained(spec);
    const int p = static_cast<int>(theta.size());
    const double lo = quantile(spec, 1e-8);
    const double hi = quantile(spec, 1.0 - 1e-8);

    std::map<double, std::vector<double>> score_cache;
    auto score_at = [&](double x) -> const std::vector<double>& {
        auto it = score_cache.find(x);
        if (it == score_cache.end()) {
            auto s = richardson_gradient(
                [&](const std::vector<double>& t) {
                    return log_pdf(from_unconstrained(spec.family, t), x);
                },
                theta);
            it = score_cache.emplace(x, std::move(s)).first;
        }
        return it->second;
    };

    Eigen::MatrixXd info(p, p);
    for (int i = 0; i < p; ++i) {
        for (int j = i; j < p; ++j) {
            const double v = integrate(
                [&](double x) {
                    const auto& s = score_at(x);
                    return s[i] * s[j] * pdf(spec, x);
                },
                lo, hi, 1e-8);
            info(i, j) = info(j, i) = v;
        }
    }
    return info;
}

// Joint covariance at the population parameters: block k is
// eta_k^{-1} I_k(theta_k)^{-1}, with eta0 = n0/n.
inline JointCovariance population_joint_covariance(const ThetaPair& theta,
                                                   std::size_t n0, std::size_t n1) {
    if (n0 == 0 || n1 == 0) {
        throw std::invalid_argument("population_joint_covariance: empty group");
    }
    JointCovariance jc;
    jc.n0 = n0;
    jc.n1 = n1;
    jc.n = n0 + n1;
    jc.eta0 = static_cast<double>(n0) / static_cast<double>(jc.n);
    jc.eta1 = static_cast<double>(n1) / static_cast<double>(jc.n);
    jc.p0 = theta.d0.n_params();
    jc.p1 = theta.d1.n_params();
    jc.sigma = Eigen::MatrixXd::Zero(jc.p0 + jc.p1, jc.p0 + jc.p1);
    jc.sigma.topLeftCorner(jc.p0, jc.p0) =
        expected_information(theta.d0).inverse() / jc.eta0;
    jc.sigma.bottomRightCorner(jc.p1, jc.p1) =
        expected_information(theta.d1).inverse() / jc.eta1;
    return jc;
}

}  // namespace rocsmsn
