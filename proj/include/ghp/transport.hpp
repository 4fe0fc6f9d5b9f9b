#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "ghp/common.hpp"
#include "ghp/event_sequence.hpp"

namespace ghp {

struct TransportPlan {
  Eigen::MatrixXd matrix;
  Eigen::VectorXd row_marginal;
  Eigen::VectorXd col_marginal;
  double cost = 0.0;
  int iterations_used = 0;
  bool converged = false;
};

inline double marginal_residual(const Eigen::MatrixXd& T, const Eigen::VectorXd& p,
                                const Eigen::VectorXd& q) {
  return (T.rowwise().sum() - p).array().abs().sum() +
         (T.colwise().sum().transpose() - q).array().abs().sum();
}

// beta = 1e-2 * median of the positive cost entries; 1.0 for an all-zero cost.
inline double default_beta(const Eigen::MatrixXd& D) {
  std::vector<double> pos;
  pos.reserve(static_cast<std::size_t>(D.size()));
  for (Eigen::Index i = 0; i < D.size(); ++i)
    if (D(i) > 0.0) pos.push_back(D(i));
  if (pos.empty()) return 1.0;
  const std::size_t mid = pos.size() / 2;
  std::nth_element(pos.begin(), pos.begin() + static_cast<std::ptrdiff_t>(mid), pos.end());
  return 1e-2 * pos[mid];
}

namespace detail {

inline void check_marginals(const Eigen::MatrixXd& D, const Eigen::VectorXd& p,
                            const Eigen::VectorXd& q) {
  if (p.size() != D.rows() || q.size() != D.cols())
    throw std::invalid_argument("sinkhorn: marginal sizes do not match cost matrix");
  if ((p.array() < 0.0).any() || (q.array() < 0.0).any())
    throw std::invalid_argument("sinkhorn: negative marginal entry");
  if (std::abs(p.sum() - 1.0) > 1e-8 || std::abs(q.sum() - 1.0) > 1e-8)
    throw std::invalid_argument("sinkhorn: marginals must sum to one");
  if (!D.allFinite() || (D.array() < 0.0).any())
    throw std::invalid_argument("sinkhorn: cost matrix must be finite and nonnegative");
}

inline double logsumexp_row(const Eigen::VectorXd& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

// Dual objective of the entropic problem at scaled potentials; block updates
// never decrease it, which is the solver's monotone diagnostic.
inline double entropic_dual(const Eigen::MatrixXd& T, const Eigen::VectorXd& u,
                            const Eigen::VectorXd& v, const Eigen::VectorXd& p,
                            const Eigen::VectorXd& q, double beta) {
  return u.dot(p) + v.dot(q) - beta * T.sum();
}

struct SinkhornCore {
  Eigen::MatrixXd plan;
  int iterations = 0;
  bool converged = false;
};

inline SinkhornCore sinkhorn_standard(const Eigen::MatrixXd& D, const Eigen::VectorXd& p,
                                      const Eigen::VectorXd& q, double beta, int max_iter,
                                      double tol, std::vector<double>* dual_trace) {
  const Eigen::MatrixXd C = (-D.array() / beta).exp().matrix();
  Eigen::VectorXd a = p;
  Eigen::VectorXd b = Eigen::VectorXd::Ones(q.size());
  SinkhornCore out;
  for (int it = 0; it < max_iter; ++it) {
    const Eigen::VectorXd den_b = C.transpose() * a;
    b = (q.array() / den_b.array().max(1e-300)).matrix();
    const Eigen::VectorXd den_a = C * b;
    a = (p.array() / den_a.array().max(1e-300)).matrix();
    out.plan = a.asDiagonal() * C * b.asDiagonal();
    out.iterations = it + 1;
    if (!out.plan.allFinite())
      throw std::runtime_error("sinkhorn: kernel underflow; increase beta");
    if (dual_trace) {
      const Eigen::VectorXd u = (beta * a.array().max(1e-300).log()).matrix();
      const Eigen::VectorXd v = (beta * b.array().max(1e-300).log()).matrix();
      dual_trace->push_back(entropic_dual(out.plan, u, v, p, q, beta));
    }
    if (marginal_residual(out.plan, p, q) < tol) {
      out.converged = true;
      break;
    }
  }
  return out;
}

// Stabilized potentials form; used for sharp regularization where exp(-D/beta)
// underflows. Warm-startable for annealing.
inline SinkhornCore sinkhorn_log(const Eigen::MatrixXd& D, const Eigen::VectorXd& p,
                                 const Eigen::VectorXd& q, double beta, int max_iter, double tol,
                                 std::vector<double>* dual_trace, Eigen::VectorXd& u,
                                 Eigen::VectorXd& v) {
  const Eigen::Index K = D.rows(), L = D.cols();
  Eigen::VectorXd logp(K), logq(L);
  for (Eigen::Index i = 0; i < K; ++i) logp(i) = p(i) > 0 ? std::log(p(i)) : -1e300;
  for (Eigen::Index j = 0; j < L; ++j) logq(j) = q(j) > 0 ? std::log(q(j)) : -1e300;
  SinkhornCore out;
  Eigen::VectorXd col(K), row(L);
  for (int it = 0; it < max_iter; ++it) {
    for (Eigen::Index j = 0; j < L; ++j) {
      col = (u - D.col(j)) / beta;
      v(j) = beta * (logq(j) - logsumexp_row(col));
    }
    for (Eigen::Index i = 0; i < K; ++i) {
      row = (v - D.row(i).transpose()) / beta;
      u(i) = beta * (logp(i) - logsumexp_row(row));
    }
    out.iterations = it + 1;
    Eigen::MatrixXd log_plan = -D;
    log_plan.colwise() += u;
    log_plan.rowwise() += v.transpose();
    out.plan = (log_plan.array() / beta).exp().matrix();
    if (dual_trace) dual_trace->push_back(entropic_dual(out.plan, u, v, p, q, beta));
    if (marginal_residual(out.plan, p, q) < tol) {
      out.converged = true;
      break;
    }
  }
  return out;
}

}  // namespace detail

// Entropic optimal transport by alternating diagonal scaling. Runs in the log
// domain below beta < 1e-2 * max(D), with beta-annealed warm starts for very
// sharp regularization. `dual_trace`, when given, records the dual objective
// after every sweep.
inline TransportPlan sinkhorn(const Eigen::MatrixXd& D, const Eigen::VectorXd& p,
                              const Eigen::VectorXd& q, double beta, int max_iter = 2000,
                              double tol = 1e-6, std::vector<double>* dual_trace = nullptr) {
  detail::check_marginals(D, p, q);
  if (beta <= 0.0) throw std::invalid_argument("sinkhorn: beta must be positive");
  if (max_iter < 1) throw std::invalid_argument("sinkhorn: max_iter must be >= 1");

  const double dmax = D.maxCoeff();
  TransportPlan plan;
  plan.row_marginal = p;
  plan.col_marginal = q;

  detail::SinkhornCore core;
  if (dmax <= 0.0) {
    core.plan = p * q.transpose();
    core.converged = true;
    if (dual_trace) dual_trace->push_back(0.0);
  } else if (beta >= 1e-2 * dmax) {
    core = detail::sinkhorn_standard(D, p, q, beta, max_iter, tol, dual_trace);
  } else {
    Eigen::VectorXd u = Eigen::VectorXd::Zero(p.size());
    Eigen::VectorXd v = Eigen::VectorXd::Zero(q.size());
    int used = 0;
    if (beta < 1e-3 * dmax) {
      // anneal from the log-domain threshold down to the target
      double stage = 1e-2 * dmax;
      while (stage > 2.0 * beta && used < max_iter) {
        auto s = detail::sinkhorn_log(D, p, q, stage, std::min(200, max_iter - used), tol,
                                      nullptr, u, v);
        used += s.iterations;
        stage *= 0.5;
      }
    }
    core = detail::sinkhorn_log(D, p, q, beta, std::max(1, max_iter - used), tol, dual_trace, u, v);
    core.iterations += used;
  }

  plan.matrix = core.plan;
  plan.iterations_used = core.iterations;
  plan.converged = core.converged;
  plan.cost = (D.array() * plan.matrix.array()).sum();
  return plan;
}

// 1D earth mover's distance (square-root convention, squared ground cost).
// Equal sizes use the sorted closed form; unequal sizes the monotone quantile
// coupling, which is optimal for the convex cost.
inline double emd_1d(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("emd_1d: empty point set");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const std::size_t M = a.size(), N = b.size();
  double cost = 0.0;
  if (M == N) {
    for (std::size_t i = 0; i < N; ++i) cost += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(cost / static_cast<double>(N));
  }
  std::size_t i = 0, j = 0;
  double cur = 0.0;
  while (i < M && j < N) {
    const double na = static_cast<double>(i + 1) / static_cast<double>(M);
    const double nb = static_cast<double>(j + 1) / static_cast<double>(N);
    const double next = std::min(na, nb);
    const double w = next - cur;
    cost += w * (a[i] - b[j]) * (a[i] - b[j]);
    cur = next;
    if (na <= nb) ++i;
    if (nb <= na) ++j;
  }
  return std::sqrt(cost);
}

// Closed form of (1/T) * integral over [0,T] of |N_u(t) - N_v(t)| dt for two
// sorted single-type event-time lists.
inline double counting_distance(const std::vector<double>& u, const std::vector<double>& v,
                                double horizon) {
  if (horizon <= 0.0) throw std::invalid_argument("counting_distance: horizon must be positive");
  auto check = [&](const std::vector<double>& t) {
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (!(t[i] >= 0.0) || t[i] > horizon)
        throw std::invalid_argument("counting_distance: time outside [0, T]");
      if (i > 0 && t[i] < t[i - 1])
        throw std::invalid_argument("counting_distance: input not sorted");
    }
  };
  check(u);
  check(v);
  const std::vector<double>& shorter = u.size() <= v.size() ? u : v;
  const std::vector<double>& longer = u.size() <= v.size() ? v : u;
  double acc = 0.0;
  for (std::size_t i = 0; i < shorter.size(); ++i) acc += std::abs(shorter[i] - longer[i]);
  for (std::size_t i = shorter.size(); i < longer.size(); ++i) acc += horizon - longer[i];
  return acc / horizon;
}

// Distance convention for sequences whose types already correspond one-to-one:
// plain average of per-type counting distances.
inline double matched_distance(const EventSequence& a, const EventSequence& b) {
  if (a.num_types != b.num_types || a.num_types < 1)
    throw std::invalid_argument("matched_distance: sequences must share a nonempty type universe");
  const double T = std::max(a.horizon, b.horizon);
  const auto ta = times_by_type(a);
  const auto tb = times_by_type(b);
  double acc = 0.0;
  for (int v = 0; v < a.num_types; ++v) acc += counting_distance(ta[v], tb[v], T);
  return acc / a.num_types;
}

struct InnerOtResult {
  double distance = 0.0;
  TransportPlan plan;
  Eigen::MatrixXd cost;
};

// Sequence-to-sequence distance: linear OT over the declared type universes
// with uniform marginals and the counting distance as ground cost. Types with
// no events contribute empty time lists.
inline InnerOtResult inner_ot(const EventSequence& a, const EventSequence& b, double beta = -1.0,
                              int max_iter = 2000, double tol = 1e-6) {
  if (a.num_types < 1 || b.num_types < 1)
    throw std::invalid_argument("inner_ot: sequences must declare at least one type");
  const double T = std::max(a.horizon, b.horizon);
  const auto ta = times_by_type(a);
  const auto tb = times_by_type(b);
  InnerOtResult res;
  res.cost.resize(a.num_types, b.num_types);
  for (int i = 0; i < a.num_types; ++i)
    for (int j = 0; j < b.num_types; ++j) res.cost(i, j) = counting_distance(ta[i], tb[j], T);
  const Eigen::VectorXd p = Eigen::VectorXd::Constant(a.num_types, 1.0 / a.num_types);
  const Eigen::VectorXd q = Eigen::VectorXd::Constant(b.num_types, 1.0 / b.num_types);
  const double bb = beta > 0.0 ? beta : default_beta(res.cost);
  res.plan = sinkhorn(res.cost, p, q, bb, max_iter, tol);
  res.distance = res.plan.cost;
  return res;
}

struct HotResult {
  double distance = 0.0;
  TransportPlan outer;                               // Q*, the joint weights
  Eigen::MatrixXd inner_cost;                        // D of pairwise inner distances
  std::vector<std::vector<TransportPlan>> inner_plans;  // T* per (k, l)
};

// Hierarchical OT: inner OT couples event types per sequence pair, the outer
// OT couples the two sequence sets with uniform marginals.
inline HotResult hot_distance(const std::vector<EventSequence>& set_a,
                              const std::vector<EventSequence>& set_b, double beta = -1.0,
                              int threads = 1) {
  if (set_a.empty() || set_b.empty()) throw std::invalid_argument("hot_distance: empty set");
  const std::size_t K = set_a.size(), L = set_b.size();
  HotResult res;
  res.inner_cost.resize(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(L));
  res.inner_plans.assign(K, std::vector<TransportPlan>(L));
  parallel_for(K * L, threads, [&](std::size_t idx) {
    const std::size_t k = idx / L, l = idx % L;
    InnerOtResult r = inner_ot(set_a[k], set_b[l], beta);
    res.inner_cost(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l)) = r.distance;
    res.inner_plans[k][l] = std::move(r.plan);
  });
  const Eigen::VectorXd p = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(K), 1.0 / K);
  const Eigen::VectorXd q = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(L), 1.0 / L);
  const double bb = beta > 0.0 ? beta : default_beta(res.inner_cost);
  res.outer = sinkhorn(res.inner_cost, p, q, bb);
  res.distance = res.outer.cost;
  return res;
}

struct GwResult {
  double distance = 0.0;
  TransportPlan plan;
  int iterations = 0;
  bool converged = false;
};

namespace detail {

// Proximal point solver for min <Df,T> + <Cg - 2 Ga T Gb', T> over uniform
// couplings: linearize, damp with the entropic kernel C = exp(-cost/alpha) .* T,
// re-project by Sinkhorn sweeps. Non-convex; finds a local optimum.
inline GwResult proximal_fgw(const Eigen::MatrixXd* Df, const Eigen::MatrixXd& Ga,
                             const Eigen::MatrixXd& Gb, double alpha, int iters,
                             const Eigen::MatrixXd* T_init) {
  const Eigen::Index M = Ga.rows(), N = Gb.rows();
  const Eigen::VectorXd p = Eigen::VectorXd::Constant(M, 1.0 / static_cast<double>(M));
  const Eigen::VectorXd q = Eigen::VectorXd::Constant(N, 1.0 / static_cast<double>(N));

  // constant part of the quadratic term under fixed marginals
  const Eigen::VectorXd row_a = Ga.array().square().matrix().rowwise().sum() / static_cast<double>(M);
  const Eigen::VectorXd row_b = Gb.array().square().matrix().rowwise().sum() / static_cast<double>(N);
  Eigen::MatrixXd cg = row_a.replicate(1, N);
  cg.rowwise() += row_b.transpose();

  Eigen::MatrixXd T = T_init ? *T_init : Eigen::MatrixXd(p * q.transpose());
  Eigen::VectorXd a = p;

  auto objective = [&](const Eigen::MatrixXd& t) {
    double val = ((cg - 2.0 * Ga * t * Gb.transpose()).array() * t.array()).sum();
    if (Df) val += (Df->array() * t.array()).sum();
    return val;
  };

  Eigen::MatrixXd cost(M, N), C(M, N);
  double prev = objective(T);
  if (alpha <= 0.0) {
    cost = cg - 2.0 * Ga * T * Gb.transpose();
    if (Df) cost += *Df;
    alpha = 0.1 * std::max(cost.maxCoeff() - cost.minCoeff(), 1e-12);
  }

  GwResult out;
  for (int it = 0; it < iters; ++it) {
    cost = cg - 2.0 * Ga * T * Gb.transpose();
    if (Df) cost += *Df;
    C = (((-(cost.array() - cost.minCoeff()) / alpha).exp()) * T.array()).matrix();
    Eigen::VectorXd b;
    for (int s = 0; s < 50; ++s) {
      b = (q.array() / (C.transpose() * a).array().max(1e-300)).matrix();
      a = (p.array() / (C * b).array().max(1e-300)).matrix();
      T = a.asDiagonal() * C * b.asDiagonal();
      if (marginal_residual(T, p, q) < 1e-9) break;
    }
    out.iterations = it + 1;
    const double cur = objective(T);
    if (std::abs(prev - cur) < 1e-11 * (1.0 + std::abs(cur))) {
      out.converged = true;
      prev = cur;
      break;
    }
    prev = cur;
  }
  out.distance = std::max(prev, 0.0);
  out.plan.matrix = T;
  out.plan.row_marginal = p;
  out.plan.col_marginal = q;
  out.plan.cost = out.distance;
  out.plan.iterations_used = out.iterations;
  out.plan.converged = out.converged;
  return out;
}

inline Eigen::MatrixXd random_coupling(Eigen::Index M, Eigen::Index N, Rng& rng) {
  Eigen::MatrixXd T(M, N);
  for (Eigen::Index i = 0; i < M; ++i)
    for (Eigen::Index j = 0; j < N; ++j) T(i, j) = 0.1 + rng.uniform01();
  const Eigen::VectorXd p = Eigen::VectorXd::Constant(M, 1.0 / static_cast<double>(M));
  const Eigen::VectorXd q = Eigen::VectorXd::Constant(N, 1.0 / static_cast<double>(N));
  for (int s = 0; s < 200; ++s) {
    const Eigen::VectorXd rs = T.rowwise().sum();
    T.array().colwise() *= (p.array() / rs.array().max(1e-300));
    const Eigen::VectorXd cs = T.colwise().sum().transpose();
    T.array().rowwise() *= (q.array() / cs.array().max(1e-300)).transpose();
    if (marginal_residual(T, p, q) < 1e-12) break;
  }
  return T;
}

inline GwResult best_of_restarts(const Eigen::MatrixXd* Df, const Eigen::MatrixXd& Ga,
                                 const Eigen::MatrixXd& Gb, double alpha, int iters, int restarts,
                                 std::uint64_t restart_seed) {
  GwResult best = proximal_fgw(Df, Ga, Gb, alpha, iters, nullptr);
  Rng rng(derive_seed(restart_seed, 0x6777ull));
  for (int r = 0; r < restarts; ++r) {
    const Eigen::MatrixXd T0 = random_coupling(Ga.rows(), Gb.rows(), rng);
    GwResult cand = proximal_fgw(Df, Ga, Gb, alpha, iters, &T0);
    if (cand.distance < best.distance) best = std::move(cand);
  }
  return best;
}

}  // namespace detail

// Discrete Gromov-Wasserstein distance (square-root convention) between two
// square structure matrices, uniform marginals. Local optimum of the proximal
// iteration; `restarts` extra random initializations keep the best.
inline GwResult gw_distance(const Eigen::MatrixXd& a1, const Eigen::MatrixXd& a2, int iters = 1000,
                            int restarts = 0, std::uint64_t restart_seed = 12345) {
  if (a1.rows() != a1.cols() || a2.rows() != a2.cols())
    throw std::invalid_argument("gw_distance: inputs must be square matrices");
  if (a1.rows() == 0 || a2.rows() == 0) throw std::invalid_argument("gw_distance: empty input");
  GwResult res = detail::best_of_restarts(nullptr, a1, a2, -1.0, iters, restarts, restart_seed);
  res.distance = std::sqrt(res.distance);
  res.plan.cost = res.distance;
  return res;
}

// Discrete fused GW objective (linear scale, no square root): Wasserstein term
// on the f-vectors plus the GW term on the g-matrices. alpha <= 0 selects a
// spread-proportional proximal weight.
inline GwResult fgw_discrete(const Eigen::VectorXd& fa, const Eigen::MatrixXd& ga,
                             const Eigen::VectorXd& fb, const Eigen::MatrixXd& gb, double alpha,
                             int iters = 1000, int restarts = 0,
                             std::uint64_t restart_seed = 12345) {
  if (ga.rows() != ga.cols() || gb.rows() != gb.cols())
    throw std::invalid_argument("fgw_discrete: structure matrices must be square");
  if (fa.size() != ga.rows() || fb.size() != gb.rows())
    throw std::invalid_argument("fgw_discrete: feature/structure dimension mismatch");
  if (fa.size() == 0 || fb.size() == 0) throw std::invalid_argument("fgw_discrete: empty input");
  Eigen::MatrixXd df(fa.size(), fb.size());
  for (Eigen::Index i = 0; i < fa.size(); ++i)
    for (Eigen::Index j = 0; j < fb.size(); ++j) {
      const double d = fa(i) - fb(j);
      df(i, j) = d * d;
    }
  return detail::best_of_restarts(&df, ga, gb, alpha, iters, restarts, restart_seed);
}

}  // namespace ghp
