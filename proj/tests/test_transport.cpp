#include <catch2/catch_amalgamated.hpp>

#include "ghp/graphon.hpp"
#include "ghp/transport.hpp"
#include "oracles.hpp"

using namespace ghp;

namespace {

EventSequence single_type_seq(std::vector<double> times, double T) {
  EventSequence s{T, 1, {}};
  for (double t : times) s.events.push_back({t, 0});
  return s;
}

Eigen::VectorXd uniform_marginal(int n) { return Eigen::VectorXd::Constant(n, 1.0 / n); }

}  // namespace

TEST_CASE("sinkhorn fixed points and input checks", "[transport]") {
  const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(3, 4);
  const Eigen::VectorXd p = uniform_marginal(3), q = uniform_marginal(4);
  const TransportPlan plan = sinkhorn(zero, p, q, 0.1);
  REQUIRE(plan.matrix.isApprox(p * q.transpose(), 1e-12));
  REQUIRE(plan.cost == 0.0);

  Eigen::VectorXd bad = p;
  bad(0) += 0.5;
  const Eigen::MatrixXd D = Eigen::MatrixXd::Random(3, 4).cwiseAbs();
  REQUIRE_THROWS_AS(sinkhorn(D, bad, q, 0.1), std::invalid_argument);
  REQUIRE_THROWS_AS(sinkhorn(D, p, q, 0.0), std::invalid_argument);
}

TEST_CASE("sinkhorn approaches the 1d closed form as beta shrinks", "[transport]") {
  Rng rng(11);
  const int n = 30;
  std::vector<double> a(n), b(n);
  for (int i = 0; i < n; ++i) {
    a[static_cast<std::size_t>(i)] = rng.uniform01();
    b[static_cast<std::size_t>(i)] = rng.uniform01();
  }
  Eigen::MatrixXd D(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double d = a[static_cast<std::size_t>(i)] - b[static_cast<std::size_t>(j)];
      D(i, j) = d * d;
    }
  const double exact = std::pow(emd_1d(a, b), 2.0);
  const Eigen::VectorXd u = uniform_marginal(n);
  double prev_err = std::numeric_limits<double>::infinity();
  for (double rel : {1e-2, 1e-3, 1e-4}) {
    const TransportPlan plan = sinkhorn(D, u, u, rel * D.maxCoeff(), 20000, 1e-9);
    const double err = std::abs(plan.cost - exact) / exact;
    REQUIRE(err < prev_err);
    prev_err = err;
  }
  REQUIRE(prev_err < 0.01);
}

TEST_CASE("sinkhorn matches the exhaustive LP on tiny instances", "[transport]") {
  Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::MatrixXd D(3, 3);
    for (int i = 0; i < 9; ++i) D(i / 3, i % 3) = rng.uniform01();
    const TransportPlan plan =
        sinkhorn(D, uniform_marginal(3), uniform_marginal(3), 1e-5 * D.maxCoeff(), 20000, 1e-9);
    REQUIRE_THAT(plan.cost, Catch::Matchers::WithinAbs(oracles::exact_uniform_ot(D), 1e-3));
  }
}

TEST_CASE("plans satisfy the polytope constraints", "[transport]") {
  Rng rng(13);
  for (int trial = 0; trial < 30; ++trial) {
    const int K = rng.uniform_int(2, 7), L = rng.uniform_int(2, 7);
    Eigen::MatrixXd D(K, L);
    for (int i = 0; i < K * L; ++i) D(i / L, i % L) = rng.uniform01();
    const Eigen::VectorXd p = uniform_marginal(K), q = uniform_marginal(L);
    const TransportPlan plan = sinkhorn(D, p, q, default_beta(D));
    REQUIRE(marginal_residual(plan.matrix, p, q) < 1e-6);
    REQUIRE((plan.matrix.array() >= 0.0).all());
  }
}

TEST_CASE("sinkhorn dual objective never decreases across sweeps", "[transport]") {
  Rng rng(14);
  for (int trial = 0; trial < 20; ++trial) {
    const int K = rng.uniform_int(2, 7), L = rng.uniform_int(2, 7);
    Eigen::MatrixXd D(K, L);
    for (int i = 0; i < K * L; ++i) D(i / L, i % L) = rng.uniform01();
    std::vector<double> trace;
    sinkhorn(D, uniform_marginal(K), uniform_marginal(L), default_beta(D), 2000, 1e-9, &trace);
    double scale = 1.0;
    for (double v : trace) scale = std::max(scale, std::abs(v));
    for (std::size_t i = 1; i < trace.size(); ++i)
      REQUIRE(trace[i] >= trace[i - 1] - 1e-9 * scale);
  }
}

TEST_CASE("emd closed forms", "[transport]") {
  REQUIRE(emd_1d({0.4, 0.1, 0.9}, {0.9, 0.4, 0.1}) == 0.0);
  REQUIRE_THAT(emd_1d({0.0}, {1.0}), Catch::Matchers::WithinAbs(1.0, 1e-15));
  REQUIRE_THAT(emd_1d({0.0, 1.0}, {0.5, 0.5}), Catch::Matchers::WithinAbs(0.5, 1e-15));
  REQUIRE_THROWS_AS(emd_1d({}, {1.0}), std::invalid_argument);
}

TEST_CASE("unequal-size emd agrees with the LP oracle", "[transport]") {
  Rng rng(15);
  for (const auto [M, N] : std::vector<std::pair<int, int>>{{2, 3}, {3, 5}, {4, 6}}) {
    for (int trial = 0; trial < 10; ++trial) {
      std::vector<double> a(static_cast<std::size_t>(M)), b(static_cast<std::size_t>(N));
      for (double& v : a) v = rng.uniform01();
      for (double& v : b) v = rng.uniform01();
      Eigen::MatrixXd D(M, N);
      for (int i = 0; i < M; ++i)
        for (int j = 0; j < N; ++j) {
          const double d = a[static_cast<std::size_t>(i)] - b[static_cast<std::size_t>(j)];
          D(i, j) = d * d;
        }
      REQUIRE_THAT(emd_1d(a, b),
                   Catch::Matchers::WithinAbs(std::sqrt(oracles::exact_uniform_ot(D)), 1e-12));
    }
  }
}

TEST_CASE("emd triangle inequality", "[transport]") {
  Rng rng(16);
  for (int trial = 0; trial < 1000; ++trial) {
    auto draw = [&](int n) {
      std::vector<double> v(static_cast<std::size_t>(n));
      for (double& x : v) x = rng.uniform01();
      return v;
    };
    const auto a = draw(rng.uniform_int(1, 6));
    const auto b = draw(rng.uniform_int(1, 6));
    const auto c = draw(rng.uniform_int(1, 6));
    REQUIRE(emd_1d(a, c) <= emd_1d(a, b) + emd_1d(b, c) + 1e-12);
  }
}

TEST_CASE("zero padding bound", "[transport]") {
  Rng rng(17);
  for (int trial = 0; trial < 1000; ++trial) {
    const int M = rng.uniform_int(1, 8);
    const int N = M + rng.uniform_int(1, 8);
    std::vector<double> a(static_cast<std::size_t>(M));
    double norm_sq = 0.0;
    for (double& x : a) {
      x = rng.uniform(-1.0, 1.0);
      norm_sq += x * x;
    }
    std::vector<double> padded = a;
    padded.resize(static_cast<std::size_t>(N), 0.0);
    const double bound = std::sqrt(static_cast<double>(N - M) / (static_cast<double>(M) * N)) *
                         std::sqrt(norm_sq);
    REQUIRE(emd_1d(a, padded) <= bound + 1e-9);
  }
}

TEST_CASE("counting distance closed form", "[transport]") {
  REQUIRE(counting_distance({1.0, 2.0}, {1.0, 2.0}, 10.0) == 0.0);
  REQUIRE_THAT(counting_distance({1.0, 2.0}, {1.5}, 10.0), Catch::Matchers::WithinAbs(0.85, 1e-15));
  REQUIRE_THAT(counting_distance({}, {4.0}, 10.0), Catch::Matchers::WithinAbs(0.6, 1e-15));
  REQUIRE_THROWS_AS(counting_distance({2.0, 1.0}, {}, 10.0), std::invalid_argument);
}

TEST_CASE("counting distance equals the direct integral", "[transport]") {
  Rng rng(18);
  for (int trial = 0; trial < 1000; ++trial) {
    const double T = rng.uniform(5.0, 20.0);
    auto draw = [&](int n) {
      std::vector<double> v(static_cast<std::size_t>(n));
      for (double& x : v) x = rng.uniform(0.0, T);
      std::sort(v.begin(), v.end());
      return v;
    };
    const auto u = draw(rng.uniform_int(0, 10));
    const auto v = draw(rng.uniform_int(0, 10));
    const double closed = counting_distance(u, v, T);
    REQUIRE_THAT(closed, Catch::Matchers::WithinAbs(oracles::counting_integral(u, v, T), 1e-12));
    REQUIRE_THAT(closed, Catch::Matchers::WithinAbs(counting_distance(v, u, T), 1e-15));
  }
}

TEST_CASE("matched-type distance averages per-type counting distances", "[transport]") {
  EventSequence a{10.0, 2, {{1.0, 0}, {2.0, 0}, {4.0, 1}}};
  EventSequence b{10.0, 2, {{1.5, 0}}};
  const double expect =
      0.5 * (counting_distance({1.0, 2.0}, {1.5}, 10.0) + counting_distance({4.0}, {}, 10.0));
  REQUIRE_THAT(matched_distance(a, b), Catch::Matchers::WithinAbs(expect, 1e-15));
  EventSequence c{10.0, 3, {}};
  REQUIRE_THROWS_AS(matched_distance(a, c), std::invalid_argument);
}

TEST_CASE("inner OT basics", "[transport]") {
  const EventSequence s = single_type_seq({1.0, 3.0}, 10.0);
  REQUIRE(inner_ot(s, s).distance == 0.0);

  const EventSequence t = single_type_seq({2.0}, 10.0);
  REQUIRE_THAT(inner_ot(s, t).distance,
               Catch::Matchers::WithinAbs(counting_distance({1.0, 3.0}, {2.0}, 10.0), 1e-12));

  EventSequence empty_types{10.0, 0, {}};
  REQUIRE_THROWS_AS(inner_ot(s, empty_types), std::invalid_argument);
}

TEST_CASE("inner OT matches the LP oracle on a small case", "[transport]") {
  EventSequence a{10.0, 2, {{1.0, 0}, {6.0, 1}, {7.0, 1}}};
  EventSequence b{10.0, 3, {{1.5, 0}, {5.0, 1}, {9.0, 2}}};
  const InnerOtResult res = inner_ot(a, b);
  REQUIRE_THAT(res.distance,
               Catch::Matchers::WithinAbs(oracles::exact_uniform_ot(res.cost), 1e-3));
}

TEST_CASE("hierarchical OT distance", "[transport]") {
  Rng rng(19);
  GraphonParams params = random_params(2, 5, rng);
  std::vector<EventSequence> set;
  for (int i = 0; i < 4; ++i) {
    HawkesModel m = sample_hp(params, rng);
    set.push_back(simulate_ogata(m, 20.0, rng));
  }
  const HotResult self = hot_distance(set, set);
  double scale = 0.0;
  int positives = 0;
  for (Eigen::Index i = 0; i < self.inner_cost.size(); ++i)
    if (self.inner_cost(i) > 0) {
      scale += self.inner_cost(i);
      ++positives;
    }
  scale /= std::max(positives, 1);
  REQUIRE(self.distance <= 1e-6 * scale);
  for (int k = 0; k < 4; ++k) REQUIRE(self.outer.matrix(k, k) >= 0.95 / 4.0);

  const HotResult one = hot_distance({set[0]}, {set[1]});
  REQUIRE_THAT(one.distance,
               Catch::Matchers::WithinAbs(inner_ot(set[0], set[1]).distance, 1e-12));
  REQUIRE_THAT(one.outer.matrix(0, 0), Catch::Matchers::WithinAbs(1.0, 1e-9));

  REQUIRE_THROWS_AS(hot_distance({}, set), std::invalid_argument);
}

TEST_CASE("antidiagonal outer cost splits evenly", "[transport]") {
  Eigen::MatrixXd D(2, 2);
  D << 0.0, 1.0, 1.0, 0.0;
  const TransportPlan plan = sinkhorn(D, uniform_marginal(2), uniform_marginal(2), default_beta(D));
  REQUIRE(plan.cost < 1e-9);
  REQUIRE_THAT(plan.matrix(0, 0), Catch::Matchers::WithinAbs(0.5, 1e-9));
  REQUIRE_THAT(plan.matrix(1, 1), Catch::Matchers::WithinAbs(0.5, 1e-9));
}

TEST_CASE("gw distance on permuted structures", "[transport]") {
  Rng rng(20);
  GraphonParams params = random_params(3, 6, rng);
  const int N = 8;
  Eigen::VectorXd xs(N);
  for (int i = 0; i < N; ++i) xs(i) = static_cast<double>(i) / N;
  const Eigen::MatrixXd A1 = eval_g_matrix(params, xs, xs);

  std::vector<int> perm{3, 0, 6, 1, 7, 2, 5, 4};
  Eigen::MatrixXd A2(N, N);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      A2(i, j) = A1(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
  REQUIRE(gw_distance(A1, A2).distance <= 1e-3);

  Eigen::MatrixXd sa(1, 1), sb(1, 1);
  sa << 0.3;
  sb << 0.85;
  REQUIRE_THAT(gw_distance(sa, sb).distance, Catch::Matchers::WithinAbs(0.55, 1e-12));

  REQUIRE_THROWS_AS(gw_distance(Eigen::MatrixXd::Zero(2, 3), sa), std::invalid_argument);
}

TEST_CASE("gw matches the permutation oracle on planted instances", "[transport]") {
  Rng rng(21);
  for (int trial = 0; trial < 15; ++trial) {
    Eigen::MatrixXd A1(3, 3);
    for (int i = 0; i < 9; ++i) A1(i / 3, i % 3) = rng.uniform01();
    std::vector<int> perm{1, 2, 0};
    Eigen::MatrixXd A2(3, 3);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        A2(i, j) = A1(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]) +
                   0.03 * rng.uniform(-1.0, 1.0);
    A2 = A2.cwiseAbs();
    const double prox = gw_distance(A1, A2).distance;
    const double brute = oracles::perm_min_gw(A1, A2);
    REQUIRE(std::abs(prox - brute) <= 1e-3);
  }
}

TEST_CASE("fused gw objective", "[transport]") {
  Rng rng(22);
  GraphonParams params = random_params(3, 6, rng);
  const int N = 12;
  Eigen::VectorXd xs(N);
  for (int i = 0; i < N; ++i) xs(i) = static_cast<double>(i) / N;
  const Eigen::VectorXd fa = eval_f_vector(params, xs);
  const Eigen::MatrixXd ga = eval_g_matrix(params, xs, xs);

  REQUIRE(fgw_discrete(fa, ga, fa, ga, -1.0).distance <= 1e-3);

  std::vector<int> perm(N);
  std::iota(perm.begin(), perm.end(), 0);
  std::reverse(perm.begin(), perm.end());
  Eigen::VectorXd fb(N);
  Eigen::MatrixXd gb(N, N);
  for (int i = 0; i < N; ++i) {
    fb(i) = fa(perm[static_cast<std::size_t>(i)]);
    for (int j = 0; j < N; ++j)
      gb(i, j) = ga(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
  }
  const double self = fgw_discrete(fa, ga, fa, ga, -1.0).distance;
  const double permuted = fgw_discrete(fa, ga, fb, gb, -1.0).distance;
  REQUIRE(std::abs(self - permuted) <= 1e-3);

  REQUIRE_THROWS_AS(fgw_discrete(fa.head(3), ga, fa, ga, -1.0), std::invalid_argument);
}

TEST_CASE("fused gw matches the permutation oracle on planted instances", "[transport]") {
  Rng rng(23);
  for (int trial = 0; trial < 15; ++trial) {
    Eigen::VectorXd fa(3);
    Eigen::MatrixXd ga(3, 3);
    for (int i = 0; i < 3; ++i) fa(i) = rng.uniform01();
    for (int i = 0; i < 9; ++i) ga(i / 3, i % 3) = rng.uniform01();
    std::vector<int> perm{2, 0, 1};
    Eigen::VectorXd fb(3);
    Eigen::MatrixXd gb(3, 3);
    for (int i = 0; i < 3; ++i) {
      fb(i) = fa(perm[static_cast<std::size_t>(i)]) + 0.02 * rng.uniform(-1.0, 1.0);
      for (int j = 0; j < 3; ++j)
        gb(i, j) = ga(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]) +
                   0.02 * rng.uniform(-1.0, 1.0);
    }
    fb = fb.cwiseAbs();
    gb = gb.cwiseAbs();
    const double prox = fgw_discrete(fa, ga, fb, gb, -1.0).distance;
    const double brute = oracles::perm_min_fgw(fa, ga, fb, gb);
    REQUIRE(std::abs(prox - brute) <= 1e-3);
  }
}
