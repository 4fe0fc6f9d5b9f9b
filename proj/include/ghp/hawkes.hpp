#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>
#include <limits>
#include <optional>

#include "ghp/common.hpp"
#include "ghp/event_sequence.hpp"

namespace ghp {

// Multivariate linear Hawkes process with exponential decay eta(t) = exp(-w t).
// Row v of A collects the impacts *onto* type v; kernel mass D = 1/w.
struct HawkesModel {
  Eigen::VectorXd mu;
  Eigen::MatrixXd A;
  double kernel_rate = 1.0;
  std::optional<Eigen::VectorXd> latent_x;

  int dim() const { return static_cast<int>(mu.size()); }
  double kernel_mass() const { return 1.0 / kernel_rate; }
};

inline void validate_model(const HawkesModel& m) {
  if (m.kernel_rate <= 0.0) throw ConfigError("hawkes model: kernel rate must be positive");
  if (m.A.rows() != m.mu.size() || m.A.cols() != m.mu.size())
    throw std::invalid_argument("hawkes model: A must be VxV matching mu");
  if ((m.mu.array() < 0.0).any()) throw std::invalid_argument("hawkes model: negative base rate");
  if ((m.A.array() < 0.0).any())
    throw std::invalid_argument("hawkes model: negative impact coefficient");
}

struct StationarityResult {
  bool stationary = false;
  double spectral_norm = 0.0;  // ||D*A||_2
};

inline StationarityResult is_stationary(const HawkesModel& m) {
  if (m.dim() == 0) return {true, 0.0};
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m.A);
  const double norm = m.kernel_mass() * svd.singularValues()(0);
  return {norm < 1.0, norm};
}

// Stationary mean rate vector: solves (I - D*A) lambda = mu.
// Requires spectral radius of D*A below one.
inline Eigen::VectorXd average_intensity(const HawkesModel& m) {
  const int V = m.dim();
  const Eigen::MatrixXd phi = m.kernel_mass() * m.A;
  const Eigen::VectorXcd eigs = Eigen::EigenSolver<Eigen::MatrixXd>(phi, false).eigenvalues();
  double radius = 0.0;
  for (int i = 0; i < V; ++i) radius = std::max(radius, std::abs(eigs(i)));
  if (radius >= 1.0)
    throw StationarityError("average intensity undefined: spectral radius of D*A is " +
                            std::to_string(radius));
  const Eigen::MatrixXd sys = Eigen::MatrixXd::Identity(V, V) - phi;
  return sys.partialPivLu().solve(m.mu);
}

// Conditional intensity of type v at time t given the strict past (t_i < t).
inline double intensity(const HawkesModel& m, const EventSequence& seq, double t, int v) {
  if (v < 0 || v >= m.dim()) throw std::domain_error("intensity: invalid type index");
  if (t < 0.0 || t > seq.horizon) throw std::domain_error("intensity: time outside [0, T]");
  double lam = m.mu(v);
  for (const Event& e : seq.events) {
    if (e.time >= t) break;
    lam += m.A(v, e.type) * std::exp(-m.kernel_rate * (t - e.time));
  }
  return lam;
}

// Ogata thinning with the running total intensity as the local bound; valid
// because the total intensity is non-increasing between events for A >= 0.
// The bound is refreshed after every candidate, accepted or not.
inline EventSequence simulate_ogata(const HawkesModel& m, double horizon, Rng& rng,
                                    std::size_t max_events = 0) {
  validate_model(m);
  if (horizon <= 0.0) throw ConfigError("simulate: horizon must be positive");
  if (!is_stationary(m).stationary)
    std::cerr << "warning: simulating a non-stationary Hawkes model\n";

  const int V = m.dim();
  EventSequence seq;
  seq.horizon = horizon;
  seq.num_types = V;
  if (V == 0) return seq;

  Eigen::VectorXd exc = Eigen::VectorXd::Zero(V);  // decayed per-type event counts
  Eigen::VectorXd lam(V);
  const double mu_total = m.mu.sum();
  const Eigen::VectorXd colsum = m.A.colwise().sum();
  double t = 0.0;
  while (true) {
    const double bound = mu_total + colsum.dot(exc);
    if (bound <= 0.0) break;
    const double tc = t + rng.exponential(bound);
    if (tc > horizon) break;
    exc *= std::exp(-m.kernel_rate * (tc - t));
    lam = m.mu + m.A * exc;
    const double total = lam.sum();
    if (rng.uniform01() * bound < total) {
      double pick = rng.uniform01() * total;
      int v = V - 1;
      for (int i = 0; i < V; ++i) {
        pick -= lam(i);
        if (pick <= 0.0) {
          v = i;
          break;
        }
      }
      seq.events.push_back({tc, v});
      exc(v) += 1.0;
      if (max_events > 0 && seq.events.size() >= max_events)
        throw DegeneracyError("simulate: event budget exceeded");
    }
    t = tc;
  }
  return seq;
}

struct LogLik {
  double value = 0.0;
  bool degenerate = false;  // some event had zero intensity; value is -inf
};

namespace detail {

// Walks the events in time order maintaining the decayed excitation state and
// hands each event's pre-jump intensity to the visitor. Ties share the state
// from before the whole tied group (strict t_i < t).
template <typename Visitor>
bool scan_event_intensities(const HawkesModel& m, const EventSequence& seq, Visitor&& visit) {
  const int V = m.dim();
  Eigen::VectorXd exc = Eigen::VectorXd::Zero(V);
  double t_prev = 0.0;
  bool ok = true;
  std::size_t i = 0;
  const auto& ev = seq.events;
  while (i < ev.size()) {
    std::size_t j = i;
    while (j < ev.size() && ev[j].time == ev[i].time) ++j;
    exc *= std::exp(-m.kernel_rate * (ev[i].time - t_prev));
    for (std::size_t k = i; k < j; ++k) {
      const int v = ev[k].type;
      const double lam = m.mu(v) + m.A.row(v).dot(exc);
      if (!visit(k, v, lam, exc)) ok = false;
    }
    for (std::size_t k = i; k < j; ++k) exc(ev[k].type) += 1.0;
    t_prev = ev[i].time;
    i = j;
  }
  return ok;
}

}  // namespace detail

// Exact log-likelihood with the closed-form compensator of the exponential
// kernel. A zero-intensity event flags the result degenerate instead of
// throwing, so callers can drop that sequence's contribution.
inline LogLik log_likelihood(const HawkesModel& m, const EventSequence& seq) {
  const int V = m.dim();
  for (const Event& e : seq.events)
    if (e.type < 0 || e.type >= V)
      throw std::invalid_argument("log_likelihood: sequence type outside model");

  double ll = 0.0;
  const bool ok = detail::scan_event_intensities(
      m, seq, [&](std::size_t, int, double lam, const Eigen::VectorXd&) {
        if (lam <= 0.0) return false;
        ll += std::log(lam);
        return true;
      });
  if (!ok) return {-std::numeric_limits<double>::infinity(), true};

  // integral of lambda_v over [0,T], summed over v
  double comp = m.mu.sum() * seq.horizon;
  Eigen::VectorXd colsum = m.A.colwise().sum();
  const double w = m.kernel_rate;
  for (const Event& e : seq.events)
    comp += colsum(e.type) * (1.0 - std::exp(-w * (seq.horizon - e.time))) / w;
  ll -= comp;
  return {ll, false};
}

struct LlGradient {
  Eigen::VectorXd mu;
  Eigen::MatrixXd A;
};

// Exact partials of log_likelihood w.r.t. mu and A.
inline LlGradient ll_gradient(const HawkesModel& m, const EventSequence& seq) {
  const int V = m.dim();
  for (const Event& e : seq.events)
    if (e.type < 0 || e.type >= V)
      throw std::invalid_argument("ll_gradient: sequence type outside model");

  LlGradient g;
  g.mu = Eigen::VectorXd::Constant(V, -seq.horizon);
  g.A = Eigen::MatrixXd::Zero(V, V);

  const bool ok = detail::scan_event_intensities(
      m, seq, [&](std::size_t, int v, double lam, const Eigen::VectorXd& exc) {
        if (lam <= 0.0) return false;
        g.mu(v) += 1.0 / lam;
        g.A.row(v) += exc.transpose() / lam;
        return true;
      });
  if (!ok) throw DegeneracyError("ll_gradient: zero-intensity event");

  const double w = m.kernel_rate;
  for (const Event& e : seq.events) {
    const double psi = (1.0 - std::exp(-w * (seq.horizon - e.time))) / w;
    g.A.col(e.type).array() -= psi;
  }
  return g;
}

}  // namespace ghp
