#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "btune/curves.hpp"

namespace btune {

struct GaussianScalar {
  double mean = 0.0;
  double std = 0.0;
};

/// Hyper-parameters of the curve belief: Freeze-Thaw time kernel over epochs,
/// and a configuration kernel over arm coordinates that is either diagonal
/// (independent arms, per-arm prior variance) or squared-exponential.
struct GPHypers {
  double ft_alpha = 1.5;
  double ft_beta = 5.0;
  double time_magnitude = 1.0;
  bool independent = true;
  double config_variance = 1.0;     // asymptote prior variance (independent mode)
  double config_lengthscale = 0.8;  // correlated mode
  double config_magnitude = 1.0;    // correlated mode
  double noise_std = 1e-3;
  double mean = 0.0;  // asymptote prior mean; also the pre-data value in data_mean mode
  bool data_mean = true;  // track the running mean of observed losses

  void validate() const;
};

// Reads gp.* metadata written by the synthetic generator into a GPHypers with
// independent arms. Throws when the keys are absent.
GPHypers hypers_from_meta(const std::map<std::string, double>& meta);

struct SliceConfig {
  double step = 0.5;
  int burn_in = 10;
  int max_attempts = 10;
};

struct FutureBest {
  int tau = 1;  // epochs until the expected minimum over the horizon
  GaussianScalar value;
};

/// Posterior over all training curves given the observations so far.
///
/// Observations arrive one loss at a time per arm, so arm k's observed epochs
/// are always 1..n_k. The belief caches per-arm Cholesky factors of
/// K_t + noise^2 I together with the asymptote posterior (Lambda, gamma, C,
/// mu), and answers predictive queries for seen and unseen curves. A bag of
/// hyper-parameter samples turns every predictive quantity into its mixture
/// over the bag.
///
/// Single-owner mutable; const queries on a frozen belief are safe to run
/// concurrently.
class BeliefState {
 public:
  BeliefState(int num_arms, std::vector<std::vector<double>> features, GPHypers hypers);
  BeliefState(int num_arms, std::vector<std::vector<double>> features,
              std::vector<GPHypers> bag);

  int num_arms() const { return num_arms_; }
  int observed(int arm) const { return static_cast<int>(obs_[arm].size()); }
  int total_observed() const { return total_obs_; }
  const std::vector<GPHypers>& hypers() const { return bag_; }

  // Incorporates one observation on `arm` at its next epoch.
  void observe(int arm, double loss);

  // Predictive Gaussian of the latent loss y_arm(epoch); dispatches on whether
  // the arm has observations. Observation noise is excluded from the variance.
  GaussianScalar predict(int arm, int epoch) const;
  GaussianScalar predict_seen(int arm, int epoch) const;
  GaussianScalar predict_unseen(int arm, int epoch) const;

  // Marginal posteriors of the per-arm asymptotes.
  std::vector<GaussianScalar> posterior_asymptote() const;

  // Joint covariance of all observed losses, arm-major then epoch-ascending:
  // K_t + O K_x O' + noise^2 I. Uses the first hypers of a bag.
  Eigen::MatrixXd joint_cov() const;

  // Log marginal likelihood of all observations under the current hypers via
  // the structured per-arm factorization. With a bag, the mixture likelihood.
  double log_likelihood() const;

  // Likelihood of the same observations under candidate hypers.
  double log_likelihood_for(const GPHypers& h) const;

  // Predictive means over the next `horizon` epochs of `arm`.
  std::vector<double> expected_future_curve(int arm, int horizon) const;

  // Earliest epoch offset achieving the minimum expected future loss, and the
  // predictive Gaussian there.
  FutureBest future_best(int arm, int horizon) const;

  // Replaces the hyper bag with slice-sampling draws targeting the marginal
  // likelihood under a broad log-normal prior. Deterministic given rng state.
  void resample_hypers(const SliceConfig& cfg, int n_samples, std::mt19937_64& rng);

  // Set when the last slice sweep gave up on a coordinate (max_attempts hit).
  bool slice_overflow() const { return slice_overflow_; }

 private:
  struct ArmCache {
    Eigen::LLT<Eigen::MatrixXd> llt;  // K_t(1..n, 1..n) + noise^2 I
    Eigen::VectorXd kinv_y;           // K^-1 y
    Eigen::VectorXd kinv_1;           // K^-1 1
    double lambda = 0.0;              // 1' K^-1 1
    double one_kinv_y = 0.0;          // 1' K^-1 y
    double y_kinv_y = 0.0;            // y' K^-1 y
    double logdet = 0.0;
  };
  struct Posterior {
    GPHypers h;                   // effective hypers (mean resolved)
    std::vector<ArmCache> arms;   // empty cache for arms without observations
    Eigen::VectorXd mu;           // asymptote posterior means, all arms
    Eigen::VectorXd c_diag;       // diag of C
    Eigen::MatrixXd c_full;       // correlated mode only
    Eigen::MatrixXd kx_inv;       // correlated mode only; K_x is fixed per posterior
    double logdet_kx = 0.0;
    double log_lik = 0.0;
  };

  void rebuild_arm(Posterior& p, int arm) const;
  void refresh_global(Posterior& p) const;
  Posterior make_posterior(const GPHypers& h) const;
  double resolve_mean(const GPHypers& h) const;
  GaussianScalar predict_one(const Posterior& p, int arm, int epoch) const;
  static GaussianScalar mix(const std::vector<GaussianScalar>& parts);

  int num_arms_;
  std::vector<std::vector<double>> features_;
  std::vector<GPHypers> bag_;
  std::vector<std::vector<double>> obs_;  // per-arm losses, epoch = index + 1
  int total_obs_ = 0;
  double obs_sum_ = 0.0;
  std::vector<Posterior> post_;
  bool slice_overflow_ = false;
};

// One univariate slice-sampling move on log_density, stepping out from x0 with
// the given width and shrinking back in; both phases capped at max_attempts.
// On giving up returns x0 and sets *overflow.
template <class LogDensity>
double slice_step(double x0, LogDensity&& log_density, double width, int max_attempts,
                  std::mt19937_64& rng, bool* overflow);

// Draws a bag of hyper samples for the belief's observations. The chain starts
// at the belief's current (first) hypers and moves coordinate-wise in
// log-space; defaults follow SliceConfig{0.5, 10, 10}.
std::vector<GPHypers> slice_sample_hypers(const BeliefState& belief, const SliceConfig& cfg,
                                          int n_samples, std::uint64_t seed,
                                          bool* overflow = nullptr);

}  // namespace btune

#include "btune/slice_impl.hpp"
