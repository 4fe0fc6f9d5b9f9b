#pragma once

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <iostream>
#include <numeric>
#include <optional>
#include <vector>

#include "ghp/common.hpp"
#include "ghp/evaluation.hpp"
#include "ghp/graphon.hpp"
#include "ghp/hawkes.hpp"
#include "ghp/transport.hpp"

namespace ghp {

enum class LearnMethod { hot, raml };

struct LearnConfig {
  int epochs = 20;
  int batch_size = 10;
  double learning_rate = 0.01;
  std::optional<int> v_max_hat;         // empty = heuristic from data
  std::optional<double> sinkhorn_beta;  // empty = transport default
  double raml_tau = 1.0;                // exponential payoff temperature (raml branch)
  double horizon = -1.0;                // <= 0: max horizon across the corpus
  std::uint64_t seed = 0;
  LearnMethod method = LearnMethod::hot;
  int fourier_order = 5;
  double kernel_rate = 1.0;
  int fgw_grid = 100;  // grid for the per-epoch distance to a reference model
  int threads = 1;
  bool freeze_g = false;  // pin g coefficients, train f only
  std::optional<GraphonParams> init_params;  // explicit start instead of random init
  bool quiet = true;
};

inline void validate_config(const LearnConfig& c) {
  if (c.epochs < 1) throw ConfigError("learn: epochs must be >= 1");
  if (c.batch_size < 1) throw ConfigError("learn: batch size must be >= 1");
  if (c.learning_rate <= 0.0) throw ConfigError("learn: learning rate must be positive");
  if (c.raml_tau <= 0.0) throw ConfigError("learn: tau must be positive");
  if (c.fourier_order < 0) throw ConfigError("learn: Fourier order must be >= 0");
  if (c.kernel_rate <= 0.0) throw ConfigError("learn: kernel rate must be positive");
  if (c.v_max_hat && *c.v_max_hat < 1) throw ConfigError("learn: v_max must be >= 1");
  if (c.sinkhorn_beta && *c.sinkhorn_beta <= 0.0) throw ConfigError("learn: beta must be positive");
}

struct EpochStats {
  double loss = 0.0;
  double mean_reward = 0.0;
  double d_fgw = std::numeric_limits<double>::quiet_NaN();  // NaN when no reference
  double seconds = 0.0;
};

struct LearnReport {
  std::vector<EpochStats> epochs;
  GraphonParams final_params;
};

// V_max heuristic: twice the mean number of distinct event types per sequence.
inline int vmax_heuristic(const std::vector<EventSequence>& data) {
  if (data.empty()) throw std::invalid_argument("vmax_heuristic: empty corpus");
  double mean = 0.0;
  for (const EventSequence& s : data) mean += distinct_type_count(s);
  mean /= static_cast<double>(data.size());
  return static_cast<int>(std::lround(2.0 * mean));
}

// theta layout: [f1, f2, g_coeffs...]
inline Eigen::VectorXd pack_params(const GraphonParams& p) {
  Eigen::VectorXd theta(2 + p.g_coeffs.size());
  theta(0) = p.f1;
  theta(1) = p.f2;
  theta.tail(p.g_coeffs.size()) = p.g_coeffs;
  return theta;
}

inline GraphonParams unpack_params(const Eigen::VectorXd& theta, int fourier_order, int v_max,
                                   double kernel_rate) {
  GraphonParams p;
  p.fourier_order = fourier_order;
  p.v_max = v_max;
  p.kernel_rate = kernel_rate;
  p.f1 = theta(0);
  p.f2 = theta(1);
  p.g_coeffs = theta.tail(theta.size() - 2);
  validate_params(p);
  return p;
}

struct RamlHotLoss {
  double loss = 0.0;
  Eigen::VectorXd weights;  // per generated sequence, max over the real axis of Q
};

// Reward-weighted negative log-likelihood: each generated sequence weighted by
// the largest joint-coupling mass it receives. Degenerate likelihoods are
// dropped rather than poisoning the sum.
inline RamlHotLoss raml_hot_loss(const std::vector<LogLik>& lls, const Eigen::MatrixXd& Q) {
  if (static_cast<Eigen::Index>(lls.size()) != Q.rows())
    throw std::invalid_argument("raml_hot_loss: Q rows must match generated count");
  RamlHotLoss out;
  out.weights = Q.rowwise().maxCoeff();
  out.loss = 0.0;
  for (std::size_t k = 0; k < lls.size(); ++k)
    if (!lls[k].degenerate) out.loss -= out.weights(static_cast<Eigen::Index>(k)) * lls[k].value;
  return out;
}

inline RamlHotLoss raml_hot_loss(const std::vector<HawkesModel>& models,
                                 const std::vector<EventSequence>& gen, const Eigen::MatrixXd& Q) {
  if (models.size() != gen.size())
    throw std::invalid_argument("raml_hot_loss: model/sequence count mismatch");
  std::vector<LogLik> lls(gen.size());
  for (std::size_t k = 0; k < gen.size(); ++k) lls[k] = log_likelihood(models[k], gen[k]);
  return raml_hot_loss(lls, Q);
}

// Original-RAML weights: exponential payoff conditionals q(k|l) = exp(-d/tau)/Z_l
// normalized over k, summed over the real axis.
inline Eigen::VectorXd raml_baseline_weights(const Eigen::MatrixXd& D, double tau) {
  if (tau <= 0.0) throw std::invalid_argument("raml_baseline_weights: tau must be positive");
  const Eigen::Index K = D.rows(), L = D.cols();
  Eigen::VectorXd w = Eigen::VectorXd::Zero(K);
  for (Eigen::Index l = 0; l < L; ++l) {
    const Eigen::VectorXd col = D.col(l);
    const double m = col.minCoeff();
    const Eigen::VectorXd e = ((m - col.array()) / tau).exp().matrix();
    w += e / e.sum();
  }
  return w;
}

// Chain rule from (mu, A) gradients back to theta, weighted per model:
// returns d(sum_k w_k LL_k)/d theta. Models must carry their latent coordinates.
inline Eigen::VectorXd param_gradient(const GraphonParams& p,
                                      const std::vector<HawkesModel>& models,
                                      const std::vector<LlGradient>& grads,
                                      const Eigen::VectorXd& weights) {
  validate_params(p);
  if (models.size() != grads.size() ||
      static_cast<Eigen::Index>(models.size()) != weights.size())
    throw std::invalid_argument("param_gradient: list sizes must match");

  const int S = p.fourier_order;
  const int n1 = S + 1;
  Eigen::VectorXd theta_grad = Eigen::VectorXd::Zero(2 + p.g_coeffs.size());
  const double sp_f1 = softplus(p.f1);
  const double sig_f1 = sigmoid(p.f1);
  const double sig_f2 = sigmoid(p.f2);
  const double dsig_f2 = sigmoid_deriv(p.f2);
  const double impact_scale = 1.0 / (p.v_max * p.kernel_mass());

  Eigen::MatrixXd g1(n1, n1), g2(n1, n1), g3(n1, n1), g4(n1, n1);
  for (int i = 0; i < n1; ++i)
    for (int j = 0; j < n1; ++j) {
      g1(i, j) = p.g_coeff(i, j, 1);
      g2(i, j) = p.g_coeff(i, j, 2);
      g3(i, j) = p.g_coeff(i, j, 3);
      g4(i, j) = p.g_coeff(i, j, 4);
    }

  for (std::size_t k = 0; k < models.size(); ++k) {
    const double w = weights(static_cast<Eigen::Index>(k));
    if (w == 0.0) continue;
    const HawkesModel& m = models[k];
    if (!m.latent_x) throw std::invalid_argument("param_gradient: model without latent coordinates");
    const Eigen::VectorXd& x = *m.latent_x;
    const int V = m.dim();
    if (grads[k].mu.size() != V || grads[k].A.rows() != V || grads[k].A.cols() != V)
      throw std::invalid_argument("param_gradient: gradient shape mismatch");

    // f part
    for (int v = 0; v < V; ++v) {
      const double e = std::exp(sig_f2 * x(v));
      theta_grad(0) += w * grads[k].mu(v) * sig_f1 * (e - 1.0);
      theta_grad(1) += w * grads[k].mu(v) * sp_f1 * x(v) * dsig_f2 * e;
    }

    // g part: W(v,v') = w * dLL/dA(v,v') * sigma'(z) * scale, folded through
    // the Fourier basis by four small matrix products.
    Eigen::MatrixXd gv = m.A * (p.v_max * p.kernel_mass());  // sigma(z) values
    Eigen::MatrixXd W(V, V);
    for (int v = 0; v < V; ++v)
      for (int u = 0; u < V; ++u)
        W(v, u) = w * grads[k].A(v, u) * gv(v, u) * (1.0 - gv(v, u)) * impact_scale;

    Eigen::MatrixXd sx, cx;
    detail::basis_matrices(S, x, sx, cx);
    const Eigen::MatrixXd m_ss = sx.transpose() * W * sx;
    const Eigen::MatrixXd m_sc = sx.transpose() * W * cx;
    const Eigen::MatrixXd m_cs = cx.transpose() * W * sx;
    const Eigen::MatrixXd m_cc = cx.transpose() * W * cx;

    for (int i = 0; i < n1; ++i)
      for (int j = 0; j < n1; ++j) {
        const int base = 2 + p.coeff_index(i, j, 1);
        theta_grad(base + 0) += g3(i, j) * m_ss(i, j) + g4(i, j) * m_sc(i, j);
        theta_grad(base + 1) += g3(i, j) * m_cs(i, j) + g4(i, j) * m_cc(i, j);
        theta_grad(base + 2) += g1(i, j) * m_ss(i, j) + g2(i, j) * m_cs(i, j);
        theta_grad(base + 3) += g1(i, j) * m_sc(i, j) + g2(i, j) * m_cc(i, j);
      }
  }
  return theta_grad;
}

struct Adam {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  Eigen::VectorXd m, v;
  int t = 0;

  void step(Eigen::VectorXd& theta, const Eigen::VectorXd& grad) {
    if (m.size() == 0) {
      m = Eigen::VectorXd::Zero(theta.size());
      v = Eigen::VectorXd::Zero(theta.size());
    }
    ++t;
    m = beta1 * m + (1.0 - beta1) * grad;
    v = (beta2 * v.array() + (1.0 - beta2) * grad.array().square()).matrix();
    const double bc1 = 1.0 - std::pow(beta1, t);
    const double bc2 = 1.0 - std::pow(beta2, t);
    theta -= (lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + eps)).matrix();
  }
};

namespace detail {

inline std::vector<std::size_t> shuffled_indices(std::size_t n, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(i) - 1));
    std::swap(idx[i - 1], idx[j]);
  }
  return idx;
}

}  // namespace detail

// One full run of the minibatch learner: sample a batch of processes and
// sequences from the current graphon, weight them against the real batch
// (hierarchical OT or exponential payoff), and ascend the weighted likelihood
// with Adam. Deterministic for a fixed seed.
inline LearnReport train(const std::vector<EventSequence>& data, const LearnConfig& cfg,
                         const GraphonParams* reference = nullptr) {
  validate_config(cfg);
  if (data.empty()) throw std::invalid_argument("train: empty corpus");
  for (const EventSequence& s : data) validate_sequence(s);

  const int v_max = cfg.v_max_hat ? *cfg.v_max_hat : vmax_heuristic(data);
  if (v_max < 1) throw ConfigError("train: resolved V_max is below one");
  double horizon = cfg.horizon;
  if (horizon <= 0.0)
    for (const EventSequence& s : data) horizon = std::max(horizon, s.horizon);

  GraphonParams params;
  if (cfg.init_params) {
    params = *cfg.init_params;
    if (params.fourier_order != cfg.fourier_order)
      throw ConfigError("train: init params Fourier order disagrees with config");
    params.v_max = v_max;
    params.kernel_rate = cfg.kernel_rate;
    validate_params(params);
  } else {
    Rng init_rng(derive_seed(cfg.seed, 0x1717ull));
    params = random_params(cfg.fourier_order, v_max, init_rng, cfg.kernel_rate);
  }
  Eigen::VectorXd theta = pack_params(params);
  Adam adam;
  adam.lr = cfg.learning_rate;

  const double beta = cfg.sinkhorn_beta.value_or(-1.0);
  constexpr std::size_t kEventBudget = 1000000;  // runaway-simulation guard

  LearnReport report;
  report.epochs.reserve(static_cast<std::size_t>(cfg.epochs));

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto tic = std::chrono::steady_clock::now();
    Rng shuffle_rng(derive_seed(cfg.seed, 0x5801ull, static_cast<std::uint64_t>(epoch)));
    const std::vector<std::size_t> order = detail::shuffled_indices(data.size(), shuffle_rng);

    double loss_sum = 0.0, reward_sum = 0.0;
    int batches_done = 0;
    const std::size_t n_batches =
        (data.size() + static_cast<std::size_t>(cfg.batch_size) - 1) /
        static_cast<std::size_t>(cfg.batch_size);

    for (std::size_t b = 0; b < n_batches; ++b) {
      const std::size_t lo = b * static_cast<std::size_t>(cfg.batch_size);
      const std::size_t hi = std::min(lo + static_cast<std::size_t>(cfg.batch_size), data.size());
      const std::size_t bb = hi - lo;
      std::vector<EventSequence> real_batch(bb);
      for (std::size_t i = 0; i < bb; ++i) real_batch[i] = data[order[lo + i]];

      params = unpack_params(theta, cfg.fourier_order, v_max, cfg.kernel_rate);
      std::vector<HawkesModel> models(bb);
      std::vector<EventSequence> gen(bb);
      std::vector<LogLik> lls(bb);
      std::vector<LlGradient> grads(bb);
      std::vector<char> usable(bb, 0);

      parallel_for(bb, cfg.threads, [&](std::size_t i) {
        Rng rng(derive_seed(cfg.seed, 0x93a1ull, static_cast<std::uint64_t>(epoch),
                            static_cast<std::uint64_t>(b), static_cast<std::uint64_t>(i)));
        models[i] = sample_hp(params, rng);
        try {
          gen[i] = simulate_ogata(models[i], horizon, rng, kEventBudget);
        } catch (const DegeneracyError&) {
          gen[i] = EventSequence{horizon, models[i].dim(), {}};
          lls[i] = {-std::numeric_limits<double>::infinity(), true};
          return;
        }
        lls[i] = log_likelihood(models[i], gen[i]);
        if (!lls[i].degenerate) {
          grads[i] = ll_gradient(models[i], gen[i]);
          usable[i] = 1;
        }
      });

      bool any_usable = false;
      for (std::size_t i = 0; i < bb; ++i) any_usable = any_usable || usable[i];
      if (!any_usable) {
        std::cerr << "warning: batch " << b << " of epoch " << epoch
                  << " skipped (all generated sequences degenerate)\n";
        continue;
      }

      const HotResult hot = hot_distance(gen, real_batch, beta, cfg.threads);
      Eigen::VectorXd weights;
      double loss = 0.0;
      if (cfg.method == LearnMethod::hot) {
        const RamlHotLoss rl = raml_hot_loss(lls, hot.outer.matrix);
        weights = rl.weights;
        loss = rl.loss;
      } else {
        weights = raml_baseline_weights(hot.inner_cost, cfg.raml_tau);
        for (std::size_t k = 0; k < bb; ++k)
          if (!lls[k].degenerate) loss -= weights(static_cast<Eigen::Index>(k)) * lls[k].value;
      }

      Eigen::VectorXd effective = weights;
      for (std::size_t k = 0; k < bb; ++k)
        if (!usable[k]) effective(static_cast<Eigen::Index>(k)) = 0.0;
      Eigen::VectorXd grad = -param_gradient(params, models, grads, effective);
      if (cfg.freeze_g) grad.tail(grad.size() - 2).setZero();
      adam.step(theta, grad);

      loss_sum += loss;
      reward_sum += weights.mean();
      ++batches_done;
    }

    params = unpack_params(theta, cfg.fourier_order, v_max, cfg.kernel_rate);
    EpochStats st;
    st.loss = batches_done > 0 ? loss_sum / batches_done : std::numeric_limits<double>::quiet_NaN();
    st.mean_reward =
        batches_done > 0 ? reward_sum / batches_done : std::numeric_limits<double>::quiet_NaN();
    if (reference) st.d_fgw = model_fgw(params, *reference, cfg.fgw_grid);
    st.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - tic).count();
    if (!cfg.quiet)
      std::cerr << "epoch " << epoch + 1 << "/" << cfg.epochs << " loss " << st.loss
                << " reward " << st.mean_reward << "\n";
    report.epochs.push_back(st);
  }

  report.final_params = unpack_params(theta, cfg.fourier_order, v_max, cfg.kernel_rate);
  return report;
}

}  // namespace ghp
