#include <catch2/catch_amalgamated.hpp>

#include "ghp/hawkes.hpp"
#include "oracles.hpp"

using namespace ghp;

namespace {

HawkesModel make_model(const Eigen::VectorXd& mu, const Eigen::MatrixXd& A, double w = 1.0) {
  HawkesModel m;
  m.mu = mu;
  m.A = A;
  m.kernel_rate = w;
  return m;
}

HawkesModel random_stationary(Rng& rng, int max_dim = 4) {
  const int V = rng.uniform_int(1, max_dim);
  Eigen::VectorXd mu(V);
  Eigen::MatrixXd A(V, V);
  for (int v = 0; v < V; ++v) {
    mu(v) = rng.uniform(0.3, 1.5);
    for (int u = 0; u < V; ++u) A(v, u) = rng.uniform(0.0, 0.6 / V);
  }
  return make_model(mu, A);
}

}  // namespace

TEST_CASE("conditional intensity", "[hawkes]") {
  const HawkesModel m =
      make_model(Eigen::VectorXd::Constant(2, 1.0), Eigen::MatrixXd::Constant(2, 2, 0.5));
  EventSequence empty{10.0, 2, {}};
  REQUIRE(intensity(m, empty, 4.0, 0) == 1.0);

  EventSequence one{10.0, 2, {{1.0, 1}}};
  REQUIRE_THAT(intensity(m, one, 2.0, 0),
               Catch::Matchers::WithinAbs(1.0 + 0.5 * std::exp(-1.0), 1e-12));
  // event exactly at t contributes nothing
  REQUIRE(intensity(m, one, 1.0, 0) == 1.0);
  REQUIRE_THROWS_AS(intensity(m, one, 1.0, 5), std::domain_error);
}

TEST_CASE("thinning reproduces the homogeneous Poisson count", "[hawkes]") {
  const HawkesModel m =
      make_model(Eigen::VectorXd::Constant(1, 2.0), Eigen::MatrixXd::Zero(1, 1));
  double total = 0.0;
  const int runs = 500;
  for (int r = 0; r < runs; ++r) {
    Rng rng(derive_seed(100, static_cast<std::uint64_t>(r)));
    total += static_cast<double>(simulate_ogata(m, 100.0, rng).size());
  }
  const double mean = total / runs;
  const double se = std::sqrt(200.0 / runs);
  REQUIRE(std::abs(mean - 200.0) < 3.0 * se);
}

TEST_CASE("zero intensity gives an empty sequence", "[hawkes]") {
  const HawkesModel m = make_model(Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Zero(2, 2));
  Rng rng(1);
  REQUIRE(simulate_ogata(m, 50.0, rng).empty());
  REQUIRE_THROWS_AS(simulate_ogata(m, 0.0, rng), ConfigError);
}

TEST_CASE("self-exciting rate matches the average intensity", "[hawkes]") {
  const HawkesModel m =
      make_model(Eigen::VectorXd::Constant(1, 1.0), Eigen::MatrixXd::Constant(1, 1, 0.5));
  double total = 0.0;
  const int runs = 200;
  for (int r = 0; r < runs; ++r) {
    Rng rng(derive_seed(200, static_cast<std::uint64_t>(r)));
    total += static_cast<double>(simulate_ogata(m, 500.0, rng).size());
  }
  const double rate = total / runs / 500.0;
  REQUIRE_THAT(rate, Catch::Matchers::WithinRel(2.0, 0.05));
}

TEST_CASE("thinning inter-event times are exponential when A = 0", "[hawkes]") {
  const double mu = 0.7;
  const HawkesModel m =
      make_model(Eigen::VectorXd::Constant(1, mu), Eigen::MatrixXd::Zero(1, 1));
  std::vector<double> gaps;
  Rng rng(300);
  double horizon = 3200.0;
  const EventSequence seq = simulate_ogata(m, horizon, rng);
  double prev = 0.0;
  for (const Event& e : seq.events) {
    gaps.push_back(e.time - prev);
    prev = e.time;
    if (gaps.size() == 2000) break;
  }
  REQUIRE(gaps.size() == 2000);
  const double ks = oracles::ks_exponential(gaps, mu);
  REQUIRE(ks < 1.628 / std::sqrt(2000.0));  // 1% critical value
}

TEST_CASE("log likelihood closed forms", "[hawkes]") {
  const HawkesModel two =
      make_model(Eigen::VectorXd::Constant(2, 1.0), Eigen::MatrixXd::Zero(2, 2));
  REQUIRE_THAT(log_likelihood(two, {10.0, 2, {}}).value, Catch::Matchers::WithinAbs(-20.0, 1e-12));

  const HawkesModel one =
      make_model(Eigen::VectorXd::Constant(1, 1.0), Eigen::MatrixXd::Zero(1, 1));
  const LogLik ll = log_likelihood(one, {10.0, 1, {{3.0, 0}}});
  REQUIRE_FALSE(ll.degenerate);
  REQUIRE_THAT(ll.value, Catch::Matchers::WithinAbs(-10.0, 1e-12));

  const HawkesModel dead = make_model(Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Zero(1, 1));
  const LogLik bad = log_likelihood(dead, {10.0, 1, {{3.0, 0}}});
  REQUIRE(bad.degenerate);
  REQUIRE(std::isinf(bad.value));
}

TEST_CASE("simultaneous events do not excite each other", "[hawkes]") {
  const HawkesModel m =
      make_model(Eigen::VectorXd::Constant(2, 1.0), Eigen::MatrixXd::Constant(2, 2, 0.4));
  const EventSequence seq{10.0, 2, {{2.0, 0}, {2.0, 1}}};
  // both events see only the base rate
  const double comp = 2.0 * 10.0 + 0.8 * (1.0 - std::exp(-8.0)) + 0.8 * (1.0 - std::exp(-8.0));
  REQUIRE_THAT(log_likelihood(m, seq).value,
               Catch::Matchers::WithinAbs(2.0 * std::log(1.0) - comp, 1e-12));
}

TEST_CASE("likelihood is invariant under relabeling types", "[hawkes]") {
  Rng rng(400);
  const HawkesModel m = random_stationary(rng, 4);
  const int V = m.dim();
  Rng srng(401);
  const EventSequence seq = simulate_ogata(m, 30.0, srng);

  std::vector<int> perm(static_cast<std::size_t>(V));
  std::iota(perm.begin(), perm.end(), 0);
  std::reverse(perm.begin(), perm.end());
  HawkesModel pm = m;
  EventSequence ps = seq;
  for (int v = 0; v < V; ++v) {
    pm.mu(perm[static_cast<std::size_t>(v)]) = m.mu(v);
    for (int u = 0; u < V; ++u)
      pm.A(perm[static_cast<std::size_t>(v)], perm[static_cast<std::size_t>(u)]) = m.A(v, u);
  }
  for (Event& e : ps.events) e.type = perm[static_cast<std::size_t>(e.type)];
  REQUIRE_THAT(log_likelihood(pm, ps).value,
               Catch::Matchers::WithinAbs(log_likelihood(m, seq).value, 1e-10));
}

TEST_CASE("gradient closed forms and finite differences", "[hawkes]") {
  const double T = 10.0;
  const HawkesModel two =
      make_model(Eigen::VectorXd::Constant(2, 1.0), Eigen::MatrixXd::Zero(2, 2));
  const LlGradient ge = ll_gradient(two, {T, 2, {}});
  REQUIRE(ge.mu.isApprox(Eigen::VectorXd::Constant(2, -T)));
  REQUIRE(ge.A.isZero());

  // Poisson: dLL/dmu = N/mu - T
  const double mu = 0.8;
  const HawkesModel pois =
      make_model(Eigen::VectorXd::Constant(1, mu), Eigen::MatrixXd::Zero(1, 1));
  const EventSequence pseq{T, 1, {{1.0, 0}, {2.5, 0}, {7.0, 0}}};
  REQUIRE_THAT(ll_gradient(pois, pseq).mu(0), Catch::Matchers::WithinAbs(3.0 / mu - T, 1e-12));

  // zero-intensity event
  const HawkesModel dead = make_model(Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Zero(1, 1));
  REQUIRE_THROWS_AS(ll_gradient(dead, pseq), DegeneracyError);

  for (int trial = 0; trial < 50; ++trial) {
    Rng rng(derive_seed(500, static_cast<std::uint64_t>(trial)));
    const HawkesModel m = random_stationary(rng);
    const EventSequence seq = simulate_ogata(m, 30.0, rng);
    const LlGradient g = ll_gradient(m, seq);
    const int V = m.dim();

    Eigen::VectorXd packed(V + V * V);
    packed.head(V) = m.mu;
    packed.tail(V * V) = Eigen::Map<const Eigen::VectorXd>(m.A.data(), V * V);
    const Eigen::VectorXd fd = oracles::central_diff(
        [&](const Eigen::VectorXd& x) {
          HawkesModel mm = m;
          mm.mu = x.head(V);
          mm.A = Eigen::Map<const Eigen::MatrixXd>(x.tail(V * V).data(), V, V);
          return log_likelihood(mm, seq).value;
        },
        packed, 1e-6);

    Eigen::VectorXd analytic(V + V * V);
    analytic.head(V) = g.mu;
    analytic.tail(V * V) = Eigen::Map<const Eigen::VectorXd>(g.A.data(), V * V);
    for (Eigen::Index i = 0; i < analytic.size(); ++i) {
      const double scale = std::max({1.0, std::abs(analytic(i)), std::abs(fd(i))});
      REQUIRE(std::abs(analytic(i) - fd(i)) < 1e-5 * scale);
    }
  }
}

TEST_CASE("average intensity solves the linear system", "[hawkes]") {
  const HawkesModel diag =
      make_model(Eigen::VectorXd::Constant(3, 0.4), Eigen::MatrixXd::Zero(3, 3));
  REQUIRE(average_intensity(diag).isApprox(diag.mu));

  const HawkesModel half =
      make_model(Eigen::VectorXd::Constant(1, 1.0), Eigen::MatrixXd::Constant(1, 1, 0.5));
  REQUIRE_THAT(average_intensity(half)(0), Catch::Matchers::WithinAbs(2.0, 1e-12));

  Eigen::MatrixXd tri(2, 2);
  tri << 0.0, 0.5, 0.0, 0.0;
  Eigen::VectorXd mu(2);
  mu << 1.0, 0.0;
  const Eigen::VectorXd lam = average_intensity(make_model(mu, tri));
  REQUIRE_THAT(lam(0), Catch::Matchers::WithinAbs(1.0, 1e-12));
  REQUIRE_THAT(lam(1), Catch::Matchers::WithinAbs(0.0, 1e-12));

  const HawkesModel unstable =
      make_model(Eigen::VectorXd::Constant(1, 1.0), Eigen::MatrixXd::Constant(1, 1, 1.2));
  REQUIRE_THROWS_AS(average_intensity(unstable), StationarityError);
}

TEST_CASE("stationarity check", "[hawkes]") {
  const auto zero = is_stationary(make_model(Eigen::VectorXd::Ones(2), Eigen::MatrixXd::Zero(2, 2)));
  REQUIRE(zero.stationary);
  REQUIRE(zero.spectral_norm == 0.0);
  const auto big =
      is_stationary(make_model(Eigen::VectorXd::Ones(1), Eigen::MatrixXd::Constant(1, 1, 1.5)));
  REQUIRE_FALSE(big.stationary);
  REQUIRE_THAT(big.spectral_norm, Catch::Matchers::WithinAbs(1.5, 1e-12));
}

TEST_CASE("empirical per-type rates converge to the average intensity", "[hawkes]") {
  for (int model_idx = 0; model_idx < 2; ++model_idx) {
    Rng mrng(derive_seed(600, static_cast<std::uint64_t>(model_idx)));
    const HawkesModel m = random_stationary(mrng, 3);
    const Eigen::VectorXd lam = average_intensity(m);
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(m.dim());
    const int runs = 200;
    const double T = 500.0;
    for (int r = 0; r < runs; ++r) {
      Rng rng(derive_seed(601, static_cast<std::uint64_t>(model_idx), static_cast<std::uint64_t>(r)));
      const EventSequence seq = simulate_ogata(m, T, rng);
      for (const Event& e : seq.events) counts(e.type) += 1.0;
    }
    for (int v = 0; v < m.dim(); ++v) {
      const double rate = counts(v) / runs / T;
      REQUIRE_THAT(rate, Catch::Matchers::WithinRel(lam(v), 0.05));
    }
  }
}
