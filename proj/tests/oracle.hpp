// Independent reference implementations the unit and acceptance tests check
// the library against: a dense joint-Gaussian build + conditioning for the
// curve belief, Monte-Carlo estimators for the closed forms, and a brute-force
// optimum for the replay environment. Everything here goes through its own
// math, not the library's structured code paths.
#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "btune/curves.hpp"
#include "btune/gp.hpp"
#include "btune/kernels.hpp"
#include "btune/rng.hpp"

namespace oracle {

// ---------------------------------------------------------------------------
// Dense Gaussian oracle for the Freeze-Thaw belief.

struct DenseGP {
  btune::GPHypers h;  // h.mean must already be the effective prior mean
  std::vector<std::vector<double>> feats;
  std::vector<std::vector<double>> obs;  // obs[k][t-1]

  int num_arms() const { return static_cast<int>(obs.size()); }

  double kx(int a, int b) const {
    if (h.independent) return a == b ? h.config_variance : 0.0;
    double d2 = 0.0;
    for (size_t f = 0; f < feats[a].size(); ++f) {
      const double d = (feats[a][f] - feats[b][f]) / h.config_lengthscale;
      d2 += d * d;
    }
    return h.config_magnitude * h.config_magnitude * std::exp(-0.5 * d2);
  }

  double kt(double t, double tp) const {
    return btune::ft_kernel(t, tp, h.ft_alpha, h.ft_beta, h.time_magnitude);
  }

  // Flattened observation order: arm-major, epoch ascending.
  struct Flat {
    std::vector<int> arm;
    std::vector<int> epoch;
    Eigen::VectorXd y;
  };
  Flat flatten() const {
    Flat f;
    for (int k = 0; k < num_arms(); ++k)
      for (size_t t = 0; t < obs[k].size(); ++t) {
        f.arm.push_back(k);
        f.epoch.push_back(static_cast<int>(t) + 1);
      }
    f.y.resize(f.arm.size());
    int i = 0;
    for (int k = 0; k < num_arms(); ++k)
      for (double v : obs[k]) f.y(i++) = v;
    return f;
  }

  Eigen::MatrixXd joint_cov() const {
    const auto f = flatten();
    const int n = static_cast<int>(f.arm.size());
    Eigen::MatrixXd s(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double v = kx(f.arm[i], f.arm[j]);
        if (f.arm[i] == f.arm[j]) v += kt(f.epoch[i], f.epoch[j]);
        if (i == j) v += h.noise_std * h.noise_std;
        s(i, j) = v;
      }
    return s;
  }

  double logpdf() const {
    const auto f = flatten();
    const int n = static_cast<int>(f.arm.size());
    const Eigen::MatrixXd s = joint_cov();
    const Eigen::VectorXd d = f.y - Eigen::VectorXd::Constant(n, h.mean);
    Eigen::LLT<Eigen::MatrixXd> llt(s);
    const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    return -0.5 * (d.dot(llt.solve(d)) + logdet + n * std::log(2.0 * M_PI));
  }

  // Conditions a latent scalar with the given prior variance and cross
  // covariances on all observations.
  btune::GaussianScalar condition(double prior_var, const Eigen::VectorXd& cross) const {
    const auto f = flatten();
    const int n = static_cast<int>(f.arm.size());
    const Eigen::MatrixXd s = joint_cov();
    Eigen::LLT<Eigen::MatrixXd> llt(s);
    const Eigen::VectorXd d = f.y - Eigen::VectorXd::Constant(n, h.mean);
    const double mean = h.mean + cross.dot(llt.solve(d));
    const double var = prior_var - cross.dot(llt.solve(cross));
    return {mean, std::sqrt(std::max(var, 0.0))};
  }

  btune::GaussianScalar predict_curve(int arm, int epoch) const {
    const auto f = flatten();
    Eigen::VectorXd cross(f.arm.size());
    for (size_t i = 0; i < f.arm.size(); ++i) {
      double v = kx(arm, f.arm[i]);
      if (arm == f.arm[i]) v += kt(epoch, f.epoch[i]);
      cross(i) = v;
    }
    return condition(kx(arm, arm) + kt(epoch, epoch), cross);
  }

  btune::GaussianScalar asymptote(int arm) const {
    const auto f = flatten();
    Eigen::VectorXd cross(f.arm.size());
    for (size_t i = 0; i < f.arm.size(); ++i) cross(i) = kx(arm, f.arm[i]);
    return condition(kx(arm, arm), cross);
  }
};

// Mirrors the library's data-mean convention without using the library.
inline double effective_mean(const btune::GPHypers& h,
                             const std::vector<std::vector<double>>& obs) {
  if (!h.data_mean) return h.mean;
  double sum = 0.0;
  int n = 0;
  for (const auto& a : obs)
    for (double v : a) {
      sum += v;
      ++n;
    }
  return n > 0 ? sum / n : h.mean;
}

// ---------------------------------------------------------------------------
// Monte-Carlo estimators.

struct McEstimate {
  double mean = 0.0;
  double se = 0.0;
};

template <class F>
McEstimate mc_expect(F&& f, int n, std::mt19937_64& rng) {
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = f(btune::normal(rng));
    sum += v;
    sum2 += v * v;
  }
  const double mean = sum / n;
  const double var = std::max(sum2 / n - mean * mean, 0.0);
  return {mean, std::sqrt(var / n)};
}

inline McEstimate mc_min(const btune::GaussianScalar& nu, double mu, int n,
                         std::mt19937_64& rng) {
  return mc_expect([&](double z) { return std::min(nu.mean + nu.std * z, mu); }, n, rng);
}

inline McEstimate mc_improvement(const btune::GaussianScalar& pred, double incumbent, int n,
                                 std::mt19937_64& rng) {
  return mc_expect(
      [&](double z) { return std::max(incumbent - (pred.mean + pred.std * z), 0.0); }, n, rng);
}

// ---------------------------------------------------------------------------
// Brute-force optimum over a curve set.

inline std::pair<int, double> brute_force_optimum(const btune::CurveSet& curves, int budget) {
  int best_arm = 0;
  double best = std::numeric_limits<double>::infinity();
  for (int k = 0; k < curves.num_arms(); ++k) {
    double v = std::numeric_limits<double>::infinity();
    for (int t = 0; t < std::min(budget, curves.curve_len(k)); ++t)
      v = std::min(v, curves.losses[k][t]);
    if (v < best) {
      best = v;
      best_arm = k;
    }
  }
  return {best_arm, best};
}

}  // namespace oracle
