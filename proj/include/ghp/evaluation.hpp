#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "ghp/common.hpp"
#include "ghp/graphon.hpp"
#include "ghp/hawkes.hpp"
#include "ghp/transport.hpp"

namespace ghp {

// Model-to-model distance: discretize both graphons on the uniform grid
// {0, 1/N, ..., (N-1)/N} and solve the discrete fused GW problem.
inline double model_fgw(const GraphonParams& a, const GraphonParams& b, int grid_n,
                        int iters = 2000, double alpha = -1.0) {
  if (grid_n < 2) throw ConfigError("model_fgw: grid must have at least two points");
  Eigen::VectorXd xs(grid_n);
  for (int i = 0; i < grid_n; ++i) xs(i) = static_cast<double>(i) / grid_n;
  const Eigen::VectorXd fa = eval_f_vector(a, xs);
  const Eigen::VectorXd fb = eval_f_vector(b, xs);
  const Eigen::MatrixXd ga = eval_g_matrix(a, xs, xs);
  const Eigen::MatrixXd gb = eval_g_matrix(b, xs, xs);
  return fgw_discrete(fa, ga, fb, gb, alpha, iters).distance;
}

// Samples n_gen processes and sequences from the graphon and returns the
// hierarchical OT distance of that set to the test set.
inline double set_ot_metric(const GraphonParams& params, const std::vector<EventSequence>& test,
                            int n_gen, double horizon, Rng& rng, double beta = -1.0,
                            int threads = 1) {
  if (n_gen < 1) throw ConfigError("set_ot_metric: n_gen must be >= 1");
  if (test.empty()) throw std::invalid_argument("set_ot_metric: empty test set");
  std::vector<EventSequence> gen(static_cast<std::size_t>(n_gen));
  for (int i = 0; i < n_gen; ++i) {
    HawkesModel m = sample_hp(params, rng);
    gen[static_cast<std::size_t>(i)] = simulate_ogata(m, horizon, rng);
  }
  return hot_distance(gen, test, beta, threads).distance;
}

struct TypeAlignment {
  int sequence = 0;  // real-sequence index
  int type = 0;      // type index within that sequence
  double x_star = 0.0;
  Eigen::VectorXd density;  // on the midpoint grid over [0,1]
  int grid = 0;
  int landmarks = 0;
  bool aligned = false;  // false when every landmark weight was zero
};

struct AlignmentOptions {
  double bandwidth = 0.1;
  int grid_n = 1000;
  bool all_pairs = false;  // sum over all real sequences instead of the owning one
};

// Soft alignment of real event types into the latent space: landmarks are the
// generated types' latent coordinates weighted by T*_{uv} Q*_{kl}, smoothed by
// a Gaussian kernel density on a uniform grid. Argmax ties break low.
inline std::vector<TypeAlignment> align_types(const HotResult& hot,
                                              const std::vector<Eigen::VectorXd>& gen_latents,
                                              const AlignmentOptions& opt = {}) {
  if (opt.grid_n < 1) throw ConfigError("align_types: grid must be positive");
  if (opt.bandwidth <= 0.0) throw ConfigError("align_types: bandwidth must be positive");
  const std::size_t K = hot.inner_plans.size();
  if (gen_latents.size() != K)
    throw std::invalid_argument("align_types: latent list must match generated count");
  const std::size_t L = K > 0 ? hot.inner_plans[0].size() : 0;
  for (std::size_t k = 0; k < K; ++k)
    if (hot.inner_plans[k][0].matrix.rows() != gen_latents[k].size())
      throw std::invalid_argument("align_types: plan rows must match latent coordinates");

  Eigen::VectorXd grid(opt.grid_n);
  for (int i = 0; i < opt.grid_n; ++i) grid(i) = (i + 0.5) / opt.grid_n;
  const double inv2s2 = 1.0 / (2.0 * opt.bandwidth * opt.bandwidth);

  std::vector<TypeAlignment> out;
  for (std::size_t l = 0; l < L; ++l) {
    const Eigen::Index n_types = hot.inner_plans[0][l].matrix.cols();
    for (Eigen::Index v = 0; v < n_types; ++v) {
      TypeAlignment res;
      res.sequence = static_cast<int>(l);
      res.type = static_cast<int>(v);
      res.grid = opt.grid_n;
      res.density = Eigen::VectorXd::Zero(opt.grid_n);
      double total = 0.0;
      for (std::size_t k = 0; k < K; ++k) {
        for (std::size_t lp = 0; lp < L; ++lp) {
          if (!opt.all_pairs && lp != l) continue;
          const Eigen::MatrixXd& T = hot.inner_plans[k][lp].matrix;
          if (v >= T.cols()) continue;
          const double qkl =
              hot.outer.matrix(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(lp));
          for (Eigen::Index u = 0; u < T.rows(); ++u) {
            const double w = T(u, v) * qkl;
            if (w <= 0.0) continue;
            ++res.landmarks;
            total += w;
            const double xu = gen_latents[k](u);
            res.density += (w * (-(grid.array() - xu).square() * inv2s2).exp()).matrix();
          }
        }
      }
      if (total > 0.0 && res.density.sum() > 0.0) {
        res.aligned = true;
        res.density *= static_cast<double>(opt.grid_n) / res.density.sum();
        Eigen::Index best = 0;
        res.density.maxCoeff(&best);  // first maximum: tie breaks to lower coordinate
        res.x_star = grid(best);
      }
      out.push_back(std::move(res));
    }
  }
  return out;
}

struct NllResult {
  double value = 0.0;
  bool degenerate = false;
};

// Negative log-likelihood of a real sequence under the process induced by the
// aligned latent coordinates.
inline NllResult test_nll(const GraphonParams& params, const EventSequence& seq,
                          const Eigen::VectorXd& aligned_x) {
  if (aligned_x.size() != seq.num_types)
    throw std::invalid_argument("test_nll: aligned coordinates must cover the type universe");
  const HawkesModel m = instantiate_model(params, aligned_x);
  const LogLik ll = log_likelihood(m, seq);
  return {-ll.value, ll.degenerate};
}

struct PropertyCheck {
  int evaluated = 0;
  int violations = 0;
  double worst_margin = std::numeric_limits<double>::infinity();  // min of RHS - LHS

  void record(double lhs, double rhs, double slack_rel) {
    ++evaluated;
    worst_margin = std::min(worst_margin, rhs - lhs);
    if (lhs > rhs * (1.0 + slack_rel) + 1e-12) ++violations;
  }
};

struct PropertyReport {
  PropertyCheck p2_f_lower;   // C1f d_w(x1,x2) <= d_w(mu1,mu2)
  PropertyCheck p2_f_upper;   // d_w(mu1,mu2) <= C2f d_w(x1,x2)
  PropertyCheck p2_g_w;       // d_w(A1,A2) <= Cg d_w(x1x,x2x)
  PropertyCheck p2_g_gw;      // d_gw(A1,A2) <= Cg d_gw(x1x,x2x)
  PropertyCheck p3;           // relative average-intensity bound, V <= U
  PropertyCheck corollary1;   // equal-size simplification
  int pairs = 0;
  int inestimable = 0;  // prerequisite D||A1||_2 < 1 failed (never, per stationarity)
  LipschitzEstimate lipschitz;
};

struct VerifyOptions {
  double slack_rel = 1e-6;
  int lip_grid = 512;
  bool equal_sizes = false;  // force |V| = |U| so Corollary 1 applies to every pair
  int gw_iters = 500;
  int gw_restarts = 2;
};

namespace detail {

inline std::vector<double> to_std(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

inline std::vector<double> flatten(const Eigen::MatrixXd& m) {
  return std::vector<double>(m.data(), m.data() + m.size());
}

inline double spectral_norm(const Eigen::MatrixXd& m) {
  return Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues()(0);
}

// Best feasible value found for d_gw(A1,A2): proximal solution plus, for small
// equal sizes, the exhaustive permutation floor.
inline double gw_upper_estimate(const Eigen::MatrixXd& a1, const Eigen::MatrixXd& a2,
                                const VerifyOptions& opt) {
  double best = gw_distance(a1, a2, opt.gw_iters, opt.gw_restarts).distance;
  const int V = static_cast<int>(a1.rows());
  if (a1.rows() == a2.rows() && V <= 6) {
    std::vector<int> perm(static_cast<std::size_t>(V));
    for (int i = 0; i < V; ++i) perm[static_cast<std::size_t>(i)] = i;
    do {
      double obj = 0.0;
      for (int m = 0; m < V; ++m)
        for (int mp = 0; mp < V; ++mp) {
          const double d = a1(m, mp) - a2(perm[static_cast<std::size_t>(m)],
                                          perm[static_cast<std::size_t>(mp)]);
          obj += d * d;
        }
      best = std::min(best, std::sqrt(obj) / V);
    } while (std::next_permutation(perm.begin(), perm.end()));
  }
  return best;
}

}  // namespace detail

// Empirical verification of the parameter-continuity and average-intensity
// bounds on sampled model pairs, using grid-estimated Lipschitz constants.
// The cross-pair distances d_w(x1x, x2x) and d_gw(x1x, x2x) reduce to
// sqrt(2) * d_w(x1, x2) exactly (separable cost, product coupling optimal),
// so both right-hand sides are computed in closed form.
inline PropertyReport verify_properties(const GraphonParams& params, int n_pairs, Rng& rng,
                                        const VerifyOptions& opt = {}) {
  if (n_pairs < 1) throw ConfigError("verify_properties: n_pairs must be >= 1");
  validate_params(params);
  PropertyReport rep;
  rep.pairs = n_pairs;
  rep.lipschitz = estimate_lipschitz(params, opt.lip_grid);
  const double c1 = rep.lipschitz.c1_f, c2 = rep.lipschitz.c2_f, cg = rep.lipschitz.c_g;
  const double D = params.kernel_mass();

  for (int pair = 0; pair < n_pairs; ++pair) {
    HawkesModel m1 = sample_hp(params, rng);
    HawkesModel m2 = opt.equal_sizes ? sample_hp(params, rng, m1.dim()) : sample_hp(params, rng);
    if (m2.dim() < m1.dim()) std::swap(m1, m2);  // orient so |V| <= |U|

    const std::vector<double> x1 = detail::to_std(*m1.latent_x);
    const std::vector<double> x2 = detail::to_std(*m2.latent_x);
    const double dx = emd_1d(x1, x2);
    const double dmu = emd_1d(detail::to_std(m1.mu), detail::to_std(m2.mu));

    rep.p2_f_lower.record(c1 * dx, dmu, opt.slack_rel);
    rep.p2_f_upper.record(dmu, c2 * dx, opt.slack_rel);

    const double d_cross = std::sqrt(2.0) * dx;
    rep.p2_g_w.record(emd_1d(detail::flatten(m1.A), detail::flatten(m2.A)), cg * d_cross,
                      opt.slack_rel);
    rep.p2_g_gw.record(detail::gw_upper_estimate(m1.A, m2.A, opt), cg * d_cross, opt.slack_rel);

    const double norm_a1 = detail::spectral_norm(m1.A);
    if (D * norm_a1 >= 1.0) {
      ++rep.inestimable;
      continue;
    }
    const Eigen::VectorXd lam1 = average_intensity(m1);
    const Eigen::VectorXd lam2 = average_intensity(m2);
    const double lam1_norm = lam1.norm();
    const double mu1_norm = m1.mu.norm();
    if (lam1_norm <= 0.0 || mu1_norm <= 0.0) {
      ++rep.inestimable;
      continue;
    }
    const double lhs3 = emd_1d(detail::to_std(lam1), detail::to_std(lam2)) / lam1_norm;
    const double V = m1.dim(), U = m2.dim();
    const double sys_norm =
        detail::spectral_norm(Eigen::MatrixXd::Identity(m1.dim(), m1.dim()) - D * m1.A);
    const double bracket = std::sqrt(2.0 * U) * cg / (c1 * sys_norm) + 1.0 / mu1_norm;
    const double rhs3 = std::sqrt((U - V) / (V * U)) +
                        bracket / (1.0 - D * norm_a1) *
                            (std::sqrt((U - V) / V) * mu1_norm + dmu);
    rep.p3.record(lhs3, rhs3, opt.slack_rel);

    if (m1.dim() == m2.dim()) {
      const double rhs_c = dmu / (1.0 - D * norm_a1) *
                           (std::sqrt(2.0 * V) * cg / (c1 * sys_norm) + 1.0 / mu1_norm);
      rep.corollary1.record(lhs3, rhs_c, opt.slack_rel);
    }
  }
  return rep;
}

}  // namespace ghp
