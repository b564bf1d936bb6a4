#include "btune/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "btune/kernels.hpp"
#include "btune/linalg.hpp"

namespace btune {

namespace {
constexpr double kLog2Pi = 1.8378770664093454835606594728112;
}

void GPHypers::validate() const {
  if (ft_alpha <= 0 || ft_beta <= 0 || time_magnitude <= 0)
    throw std::invalid_argument("GPHypers: time kernel parameters must be positive");
  if (independent) {
    if (config_variance <= 0)
      throw std::invalid_argument("GPHypers: config_variance must be positive");
  } else {
    if (config_lengthscale <= 0 || config_magnitude <= 0)
      throw std::invalid_argument("GPHypers: config kernel parameters must be positive");
  }
  if (noise_std < 0) throw std::invalid_argument("GPHypers: noise_std must be >= 0");
}

GPHypers hypers_from_meta(const std::map<std::string, double>& meta) {
  const char* keys[] = {"gp.ft_alpha", "gp.ft_beta",    "gp.time_magnitude",
                        "gp.asym_magnitude", "gp.noise_std", "gp.mean"};
  for (const char* k : keys)
    if (!meta.count(k)) throw std::runtime_error(std::string("hypers_from_meta: missing ") + k);
  GPHypers h;
  h.ft_alpha = meta.at("gp.ft_alpha");
  h.ft_beta = meta.at("gp.ft_beta");
  h.time_magnitude = meta.at("gp.time_magnitude");
  h.independent = true;
  const double am = meta.at("gp.asym_magnitude");
  h.config_variance = am * am;
  h.config_magnitude = am;
  if (meta.count("gp.asym_lengthscale")) h.config_lengthscale = meta.at("gp.asym_lengthscale");
  h.noise_std = meta.at("gp.noise_std");
  h.mean = meta.at("gp.mean");
  h.data_mean = false;
  h.validate();
  return h;
}

BeliefState::BeliefState(int num_arms, std::vector<std::vector<double>> features, GPHypers hypers)
    : BeliefState(num_arms, std::move(features), std::vector<GPHypers>{std::move(hypers)}) {}

BeliefState::BeliefState(int num_arms, std::vector<std::vector<double>> features,
                         std::vector<GPHypers> bag)
    : num_arms_(num_arms), features_(std::move(features)), bag_(std::move(bag)),
      obs_(num_arms) {
  if (num_arms < 1) throw std::invalid_argument("BeliefState: need at least one arm");
  if (bag_.empty()) throw std::invalid_argument("BeliefState: empty hyper bag");
  for (const auto& h : bag_) {
    h.validate();
    if (!h.independent && features_.empty())
      throw std::invalid_argument("BeliefState: correlated config kernel needs arm features");
  }
  for (const auto& h : bag_) post_.push_back(make_posterior(h));
}

double BeliefState::resolve_mean(const GPHypers& h) const {
  if (h.data_mean && total_obs_ > 0) return obs_sum_ / total_obs_;
  return h.mean;
}

void BeliefState::rebuild_arm(Posterior& p, int arm) const {
  const auto& y_raw = obs_[arm];
  const int n = static_cast<int>(y_raw.size());
  ArmCache& c = p.arms[arm];
  if (n == 0) {
    c = ArmCache{};
    return;
  }
  Eigen::MatrixXd k(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      k(i, j) = ft_kernel(i + 1, j + 1, p.h.ft_alpha, p.h.ft_beta, p.h.time_magnitude);
  k.diagonal().array() += p.h.noise_std * p.h.noise_std;
  c.llt = llt_with_jitter(std::move(k));
  Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(y_raw.data(), n);
  c.kinv_y = c.llt.solve(y);
  c.kinv_1 = c.llt.solve(Eigen::VectorXd::Ones(n));
  c.lambda = c.kinv_1.sum();
  c.one_kinv_y = c.kinv_y.sum();
  c.y_kinv_y = y.dot(c.kinv_y);
  c.logdet = 2.0 * c.llt.matrixLLT().diagonal().array().log().sum();
}

void BeliefState::refresh_global(Posterior& p) const {
  const double m = resolve_mean(p.h);
  p.h.mean = m;
  const int k_arms = num_arms_;

  Eigen::VectorXd lambda = Eigen::VectorXd::Zero(k_arms);
  Eigen::VectorXd gamma = Eigen::VectorXd::Zero(k_arms);
  double data_terms = 0.0;
  for (int k = 0; k < k_arms; ++k) {
    const ArmCache& c = p.arms[k];
    const int n = observed(k);
    if (n == 0) continue;
    lambda(k) = c.lambda;
    gamma(k) = c.one_kinv_y - c.lambda * m;
    const double quad = c.y_kinv_y - 2.0 * m * c.one_kinv_y + m * m * c.lambda;
    data_terms += -0.5 * (quad + c.logdet + n * kLog2Pi);
  }

  double logdet_a = 0.0, logdet_kx = 0.0, quad_c = 0.0;
  if (p.h.independent) {
    const double v = p.h.config_variance;
    p.c_diag.resize(k_arms);
    p.mu.resize(k_arms);
    for (int k = 0; k < k_arms; ++k) {
      const double a = 1.0 / v + lambda(k);
      p.c_diag(k) = 1.0 / a;
      p.mu(k) = m + p.c_diag(k) * gamma(k);
      logdet_a += std::log(a);
      logdet_kx += std::log(v);
      quad_c += gamma(k) * gamma(k) * p.c_diag(k);
    }
  } else {
    if (p.kx_inv.rows() != k_arms) {
      Eigen::MatrixXd kx(k_arms, k_arms);
      for (int i = 0; i < k_arms; ++i)
        for (int j = 0; j < k_arms; ++j) {
          double d2 = 0.0;
          for (size_t f = 0; f < features_[i].size(); ++f) {
            const double d = (features_[i][f] - features_[j][f]) / p.h.config_lengthscale;
            d2 += d * d;
          }
          kx(i, j) = p.h.config_magnitude * p.h.config_magnitude * std::exp(-0.5 * d2);
        }
      auto llt_kx = llt_with_jitter(std::move(kx));
      p.logdet_kx = 2.0 * llt_kx.matrixLLT().diagonal().array().log().sum();
      p.kx_inv = llt_kx.solve(Eigen::MatrixXd::Identity(k_arms, k_arms));
    }
    logdet_kx = p.logdet_kx;
    Eigen::MatrixXd a = p.kx_inv;
    a.diagonal() += lambda;
    auto llt_a = llt_with_jitter(std::move(a));
    logdet_a = 2.0 * llt_a.matrixLLT().diagonal().array().log().sum();
    p.c_full = llt_a.solve(Eigen::MatrixXd::Identity(k_arms, k_arms));
    p.c_diag = p.c_full.diagonal();
    p.mu = Eigen::VectorXd::Constant(k_arms, m) + p.c_full * gamma;
    quad_c = gamma.dot(p.c_full * gamma);
  }

  p.log_lik = data_terms + 0.5 * quad_c - 0.5 * (logdet_a + logdet_kx);
}

BeliefState::Posterior BeliefState::make_posterior(const GPHypers& h) const {
  Posterior p;
  p.h = h;
  p.arms.resize(num_arms_);
  for (int k = 0; k < num_arms_; ++k)
    if (observed(k) > 0) rebuild_arm(p, k);
  refresh_global(p);
  return p;
}

void BeliefState::observe(int arm, double loss) {
  if (arm < 0 || arm >= num_arms_) throw std::out_of_range("BeliefState::observe: bad arm");
  if (!std::isfinite(loss)) throw std::invalid_argument("BeliefState::observe: non-finite loss");
  obs_[arm].push_back(loss);
  ++total_obs_;
  obs_sum_ += loss;
  for (auto& p : post_) {
    rebuild_arm(p, arm);
    refresh_global(p);
  }
}

GaussianScalar BeliefState::predict_one(const Posterior& p, int arm, int epoch) const {
  const int n = observed(arm);
  const double ktt = ft_kernel(epoch, epoch, p.h.ft_alpha, p.h.ft_beta, p.h.time_magnitude);
  if (n == 0) {
    const double var = ktt + p.c_diag(arm);
    return {p.mu(arm), std::sqrt(std::max(var, 0.0))};
  }
  const ArmCache& c = p.arms[arm];
  Eigen::VectorXd kv(n);
  for (int i = 0; i < n; ++i)
    kv(i) = ft_kernel(i + 1, epoch, p.h.ft_alpha, p.h.ft_beta, p.h.time_magnitude);
  const double omega = 1.0 - kv.dot(c.kinv_1);
  const double mean = kv.dot(c.kinv_y) + omega * p.mu(arm);
  const double var = ktt - kv.dot(c.llt.solve(kv)) + omega * omega * p.c_diag(arm);
  return {mean, std::sqrt(std::max(var, 0.0))};
}

GaussianScalar BeliefState::mix(const std::vector<GaussianScalar>& parts) {
  if (parts.size() == 1) return parts[0];
  double m = 0.0, s2 = 0.0;
  for (const auto& g : parts) {
    m += g.mean;
    s2 += g.std * g.std + g.mean * g.mean;
  }
  m /= static_cast<double>(parts.size());
  s2 = s2 / static_cast<double>(parts.size()) - m * m;
  return {m, std::sqrt(std::max(s2, 0.0))};
}

GaussianScalar BeliefState::predict(int arm, int epoch) const {
  if (arm < 0 || arm >= num_arms_) throw std::out_of_range("BeliefState::predict: bad arm");
  if (epoch < 1) throw std::invalid_argument("BeliefState::predict: epoch must be >= 1");
  std::vector<GaussianScalar> parts;
  parts.reserve(post_.size());
  for (const auto& p : post_) parts.push_back(predict_one(p, arm, epoch));
  return mix(parts);
}

GaussianScalar BeliefState::predict_seen(int arm, int epoch) const {
  if (observed(arm) == 0)
    throw std::logic_error("predict_seen: arm has no observations");
  return predict(arm, epoch);
}

GaussianScalar BeliefState::predict_unseen(int arm, int epoch) const {
  if (observed(arm) != 0)
    throw std::logic_error("predict_unseen: arm has observations");
  return predict(arm, epoch);
}

std::vector<GaussianScalar> BeliefState::posterior_asymptote() const {
  std::vector<GaussianScalar> out(num_arms_);
  std::vector<GaussianScalar> parts(post_.size());
  for (int k = 0; k < num_arms_; ++k) {
    for (size_t s = 0; s < post_.size(); ++s)
      parts[s] = {post_[s].mu(k), std::sqrt(std::max(post_[s].c_diag(k), 0.0))};
    out[k] = mix(parts);
  }
  return out;
}

Eigen::MatrixXd BeliefState::joint_cov() const {
  if (total_obs_ == 0) throw std::logic_error("joint_cov: no observations");
  const GPHypers& h = post_[0].h;
  std::vector<int> arm_of, epoch_of;
  for (int k = 0; k < num_arms_; ++k)
    for (int t = 1; t <= observed(k); ++t) {
      arm_of.push_back(k);
      epoch_of.push_back(t);
    }
  const int n = static_cast<int>(arm_of.size());
  auto kx = [&](int a, int b) {
    if (h.independent) return a == b ? h.config_variance : 0.0;
    double d2 = 0.0;
    for (size_t f = 0; f < features_[a].size(); ++f) {
      const double d = (features_[a][f] - features_[b][f]) / h.config_lengthscale;
      d2 += d * d;
    }
    return h.config_magnitude * h.config_magnitude * std::exp(-0.5 * d2);
  };
  Eigen::MatrixXd s(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double v = kx(arm_of[i], arm_of[j]);
      if (arm_of[i] == arm_of[j])
        v += ft_kernel(epoch_of[i], epoch_of[j], h.ft_alpha, h.ft_beta, h.time_magnitude);
      if (i == j) v += h.noise_std * h.noise_std;
      s(i, j) = v;
    }
  llt_with_jitter(s);  // non-PSD surfaces here rather than at a later solve
  return s;
}

double BeliefState::log_likelihood() const {
  if (total_obs_ == 0) throw std::logic_error("log_likelihood: no observations");
  if (post_.size() == 1) return post_[0].log_lik;
  // Mixture likelihood over the bag: log of the mean density.
  double max_ll = post_[0].log_lik;
  for (const auto& p : post_) max_ll = std::max(max_ll, p.log_lik);
  double acc = 0.0;
  for (const auto& p : post_) acc += std::exp(p.log_lik - max_ll);
  return max_ll + std::log(acc / static_cast<double>(post_.size()));
}

double BeliefState::log_likelihood_for(const GPHypers& h) const {
  return make_posterior(h).log_lik;
}

std::vector<double> BeliefState::expected_future_curve(int arm, int horizon) const {
  if (horizon < 1) throw std::invalid_argument("expected_future_curve: horizon must be >= 1");
  const int t0 = observed(arm);
  std::vector<double> means(horizon, 0.0);
  for (const auto& p : post_) {
    const int n = observed(arm);
    if (n == 0) {
      for (int t = 0; t < horizon; ++t) means[t] += p.mu(arm);
      continue;
    }
    const ArmCache& c = p.arms[arm];
    Eigen::VectorXd kv(n);
    for (int t = 0; t < horizon; ++t) {
      const double te = t0 + t + 1;
      for (int i = 0; i < n; ++i)
        kv(i) = ft_kernel(i + 1, te, p.h.ft_alpha, p.h.ft_beta, p.h.time_magnitude);
      const double omega = 1.0 - kv.dot(c.kinv_1);
      means[t] += kv.dot(c.kinv_y) + omega * p.mu(arm);
    }
  }
  for (double& v : means) v /= static_cast<double>(post_.size());
  return means;
}

FutureBest BeliefState::future_best(int arm, int horizon) const {
  const auto means = expected_future_curve(arm, horizon);
  int tau = 1;
  for (int t = 1; t < horizon; ++t)
    if (means[t] < means[tau - 1]) tau = t + 1;
  FutureBest fb;
  fb.tau = tau;
  fb.value = predict(arm, observed(arm) + tau);
  return fb;
}

void BeliefState::resample_hypers(const SliceConfig& cfg, int n_samples, std::mt19937_64& rng) {
  bool overflow = false;
  bag_ = slice_sample_hypers(*this, cfg, n_samples, rng(), &overflow);
  slice_overflow_ = overflow;
  post_.clear();
  for (const auto& h : bag_) post_.push_back(make_posterior(h));
}

namespace {

// Positive hyper coordinates the sampler sweeps over, as accessors.
struct Coord {
  double GPHypers::* field;
};

std::vector<Coord> slice_coords(const GPHypers& h) {
  std::vector<Coord> coords = {{&GPHypers::ft_alpha},
                               {&GPHypers::ft_beta},
                               {&GPHypers::time_magnitude}};
  if (h.independent)
    coords.push_back({&GPHypers::config_variance});
  else {
    coords.push_back({&GPHypers::config_lengthscale});
    coords.push_back({&GPHypers::config_magnitude});
  }
  if (h.noise_std > 0) coords.push_back({&GPHypers::noise_std});
  return coords;
}

}  // namespace

std::vector<GPHypers> slice_sample_hypers(const BeliefState& belief, const SliceConfig& cfg,
                                          int n_samples, std::uint64_t seed, bool* overflow) {
  if (belief.total_observed() == 0)
    throw std::logic_error("slice_sample_hypers: no observations");
  if (cfg.step <= 0) throw std::invalid_argument("slice_sample_hypers: step must be positive");
  if (n_samples < 1) throw std::invalid_argument("slice_sample_hypers: need n_samples >= 1");

  GPHypers cur = belief.hypers().front();
  const auto coords = slice_coords(cur);
  // Broad log-normal prior centered at the chain start, sd 3 in log-space.
  std::vector<double> prior_center(coords.size());
  for (size_t i = 0; i < coords.size(); ++i) prior_center[i] = std::log(cur.*(coords[i].field));
  constexpr double kPriorSd = 3.0;

  auto rng = make_rng(seed);
  bool any_overflow = false;

  auto sweep = [&]() {
    for (size_t i = 0; i < coords.size(); ++i) {
      const double u0 = std::log(cur.*(coords[i].field));
      auto log_target = [&](double u) {
        GPHypers cand = cur;
        cand.*(coords[i].field) = std::exp(u);
        const double z = (u - prior_center[i]) / kPriorSd;
        double ll;
        try {
          ll = belief.log_likelihood_for(cand);
        } catch (const std::runtime_error&) {
          return -std::numeric_limits<double>::infinity();
        }
        return ll - 0.5 * z * z;
      };
      bool of = false;
      const double u1 = slice_step(u0, log_target, cfg.step, cfg.max_attempts, rng, &of);
      any_overflow = any_overflow || of;
      cur.*(coords[i].field) = std::exp(u1);
    }
  };

  for (int b = 0; b < cfg.burn_in; ++b) sweep();
  std::vector<GPHypers> bag;
  bag.reserve(n_samples);
  for (int s = 0; s < n_samples; ++s) {
    sweep();
    bag.push_back(cur);
  }
  if (overflow) *overflow = any_overflow;
  return bag;
}

}  // namespace btune
