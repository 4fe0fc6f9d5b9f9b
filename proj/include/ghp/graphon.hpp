#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <optional>

#include "ghp/common.hpp"
#include "ghp/hawkes.hpp"

namespace ghp {

// Parametric graphon pair:
//   f(x)   = softplus(f1) * (exp(sigmoid(f2) * x) - 1)
//   g(x,y) = sigmoid( sum_{i,j=0..S} (g1_ij sin(i pi x) + g2_ij cos(i pi x))
//                                  * (g3_ij sin(j pi y) + g4_ij cos(j pi y)) )
// on Omega = [0,1]. f(0) = 0 exactly and g stays strictly inside (0,1).
struct GraphonParams {
  double f1 = 0.0;
  double f2 = 0.0;
  int fourier_order = 0;    // S
  Eigen::VectorXd g_coeffs; // length 4*(S+1)^2, row-major (i, j, m), m in 1..4
  int v_max = 1;
  double kernel_rate = 1.0; // eta(t) = exp(-kernel_rate * t), D = 1/kernel_rate

  int coeff_index(int i, int j, int m) const {
    return (i * (fourier_order + 1) + j) * 4 + (m - 1);
  }
  double g_coeff(int i, int j, int m) const { return g_coeffs(coeff_index(i, j, m)); }

  double kernel_mass() const { return 1.0 / kernel_rate; }
};

inline void validate_params(const GraphonParams& p) {
  if (p.fourier_order < 0) throw ConfigError("graphon: Fourier order must be >= 0");
  if (p.v_max < 1) throw ConfigError("graphon: v_max must be >= 1");
  if (p.kernel_rate <= 0.0) throw ConfigError("graphon: kernel rate must be positive");
  const int n = 4 * (p.fourier_order + 1) * (p.fourier_order + 1);
  if (p.g_coeffs.size() != n)
    throw ConfigError("graphon: g_coeffs must have length 4*(S+1)^2");
}

inline double eval_f(const GraphonParams& p, double x) {
  if (!(x >= 0.0 && x <= 1.0)) throw std::domain_error("eval_f: coordinate outside [0,1]");
  return softplus(p.f1) * (std::exp(sigmoid(p.f2) * x) - 1.0);
}

inline Eigen::VectorXd eval_f_vector(const GraphonParams& p, const Eigen::VectorXd& xs) {
  Eigen::VectorXd out(xs.size());
  for (Eigen::Index i = 0; i < xs.size(); ++i) out(i) = eval_f(p, xs(i));
  return out;
}

namespace detail {

// Coefficient products M^1..M^4 with M^1_ij = g1_ij*g3_ij etc., so the Fourier
// argument factorizes as sx' M1 sy + sx' M2 cy + cx' M3 sy + cx' M4 cy.
struct FourierTables {
  Eigen::MatrixXd m1, m2, m3, m4;
};

inline FourierTables fourier_tables(const GraphonParams& p) {
  const int n = p.fourier_order + 1;
  FourierTables t{Eigen::MatrixXd(n, n), Eigen::MatrixXd(n, n), Eigen::MatrixXd(n, n),
                  Eigen::MatrixXd(n, n)};
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double g1 = p.g_coeff(i, j, 1), g2 = p.g_coeff(i, j, 2);
      const double g3 = p.g_coeff(i, j, 3), g4 = p.g_coeff(i, j, 4);
      t.m1(i, j) = g1 * g3;
      t.m2(i, j) = g1 * g4;
      t.m3(i, j) = g2 * g3;
      t.m4(i, j) = g2 * g4;
    }
  return t;
}

inline void basis_matrices(int order, const Eigen::VectorXd& xs, Eigen::MatrixXd& sin_m,
                           Eigen::MatrixXd& cos_m) {
  const int n = order + 1;
  sin_m.resize(xs.size(), n);
  cos_m.resize(xs.size(), n);
  for (Eigen::Index r = 0; r < xs.size(); ++r)
    for (int i = 0; i < n; ++i) {
      sin_m(r, i) = std::sin(i * M_PI * xs(r));
      cos_m(r, i) = std::cos(i * M_PI * xs(r));
    }
}

// Pre-sigmoid Fourier sums for all (x, y) pairs of two coordinate vectors.
inline Eigen::MatrixXd fourier_argument(const GraphonParams& p, const Eigen::VectorXd& xs,
                                        const Eigen::VectorXd& ys) {
  const FourierTables t = fourier_tables(p);
  Eigen::MatrixXd sx, cx, sy, cy;
  basis_matrices(p.fourier_order, xs, sx, cx);
  basis_matrices(p.fourier_order, ys, sy, cy);
  return sx * t.m1 * sy.transpose() + sx * t.m2 * cy.transpose() +
         cx * t.m3 * sy.transpose() + cx * t.m4 * cy.transpose();
}

}  // namespace detail

inline double eval_g(const GraphonParams& p, double x, double y) {
  if (!(x >= 0.0 && x <= 1.0) || !(y >= 0.0 && y <= 1.0))
    throw std::domain_error("eval_g: coordinate outside [0,1]^2");
  double z = 0.0;
  for (int i = 0; i <= p.fourier_order; ++i)
    for (int j = 0; j <= p.fourier_order; ++j) {
      const double ax = p.g_coeff(i, j, 1) * std::sin(i * M_PI * x) +
                        p.g_coeff(i, j, 2) * std::cos(i * M_PI * x);
      const double by = p.g_coeff(i, j, 3) * std::sin(j * M_PI * y) +
                        p.g_coeff(i, j, 4) * std::cos(j * M_PI * y);
      z += ax * by;
    }
  return sigmoid(z);
}

inline Eigen::MatrixXd eval_g_matrix(const GraphonParams& p, const Eigen::VectorXd& xs,
                                     const Eigen::VectorXd& ys) {
  for (Eigen::Index i = 0; i < xs.size(); ++i)
    if (!(xs(i) >= 0.0 && xs(i) <= 1.0)) throw std::domain_error("eval_g: coordinate outside [0,1]");
  for (Eigen::Index i = 0; i < ys.size(); ++i)
    if (!(ys(i) >= 0.0 && ys(i) <= 1.0)) throw std::domain_error("eval_g: coordinate outside [0,1]");
  return detail::fourier_argument(p, xs, ys).unaryExpr([](double z) { return sigmoid(z); });
}

// Instantiates the finite Hawkes process at given latent coordinates:
// mu_v = f(x_v), a_{vv'} = g(x_v, x_{v'}) / (V_max * D).
inline HawkesModel instantiate_model(const GraphonParams& p, const Eigen::VectorXd& latent_x) {
  validate_params(p);
  HawkesModel m;
  m.kernel_rate = p.kernel_rate;
  m.mu = eval_f_vector(p, latent_x);
  const double scale = 1.0 / (p.v_max * p.kernel_mass());
  m.A = scale * eval_g_matrix(p, latent_x, latent_x);
  m.latent_x = latent_x;
  return m;
}

// Generative draw: V ~ uniform{1..V_max} (unless forced), x_v iid U[0,1].
inline HawkesModel sample_hp(const GraphonParams& p, Rng& rng,
                             std::optional<int> forced_v = std::nullopt) {
  validate_params(p);
  int V;
  if (forced_v) {
    if (*forced_v < 1 || *forced_v > p.v_max)
      throw ConfigError("sample_hp: forced V outside {1..V_max}");
    V = *forced_v;
  } else {
    V = rng.uniform_int(1, p.v_max);
  }
  Eigen::VectorXd x(V);
  for (int v = 0; v < V; ++v) x(v) = rng.uniform01();
  return instantiate_model(p, x);
}

struct LipschitzEstimate {
  double c1_f = 0.0;  // lower bi-Lipschitz constant of f
  double c2_f = 0.0;  // upper
  double c_g = 0.0;   // Lipschitz constant of g on [0,1]^2
  int grid_size = 0;
};

// Grid-based estimates: difference quotients of f over all grid pairs,
// gradient-norm proxy for g from axis-aligned forward differences.
inline LipschitzEstimate estimate_lipschitz(const GraphonParams& p, int grid_size = 512) {
  validate_params(p);
  if (grid_size < 2) throw ConfigError("estimate_lipschitz: grid size must be >= 2");
  const int G = grid_size;
  Eigen::VectorXd xs(G);
  for (int i = 0; i < G; ++i) xs(i) = static_cast<double>(i) / (G - 1);

  const Eigen::VectorXd fv = eval_f_vector(p, xs);
  LipschitzEstimate est;
  est.grid_size = G;
  est.c1_f = std::numeric_limits<double>::infinity();
  est.c2_f = 0.0;
  for (int i = 0; i < G; ++i)
    for (int j = i + 1; j < G; ++j) {
      const double q = std::abs(fv(j) - fv(i)) / (xs(j) - xs(i));
      est.c1_f = std::min(est.c1_f, q);
      est.c2_f = std::max(est.c2_f, q);
    }

  const Eigen::MatrixXd gm = eval_g_matrix(p, xs, xs);
  const double h = 1.0 / (G - 1);
  double cg = 0.0;
  for (int i = 0; i + 1 < G; ++i)
    for (int j = 0; j + 1 < G; ++j) {
      const double dx = (gm(i + 1, j) - gm(i, j)) / h;
      const double dy = (gm(i, j + 1) - gm(i, j)) / h;
      cg = std::max(cg, std::sqrt(dx * dx + dy * dy));
    }
  est.c_g = cg;
  return est;
}

// Every theta entry iid standard normal; matches the synthetic setup used for
// both ground-truth models and learner initialization.
inline GraphonParams random_params(int fourier_order, int v_max, Rng& rng,
                                   double kernel_rate = 1.0) {
  GraphonParams p;
  p.fourier_order = fourier_order;
  p.v_max = v_max;
  p.kernel_rate = kernel_rate;
  p.f1 = rng.normal();
  p.f2 = rng.normal();
  const int n = 4 * (fourier_order + 1) * (fourier_order + 1);
  p.g_coeffs.resize(n);
  for (int i = 0; i < n; ++i) p.g_coeffs(i) = rng.normal();
  validate_params(p);
  return p;
}

}  // namespace ghp
