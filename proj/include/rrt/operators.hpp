#pragma once

#include "rrt/core.hpp"
#include "rrt/hyperparameters.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace rrt {

/// Undirected territory graph. Vertices are 0-based internally; every edge is
/// stored once as (d1, d2) with d1 < d2, in insertion order.
class EpiGraph {
 public:
  using Edge = std::pair<int, int>;

  EpiGraph() = default;
  explicit EpiGraph(int num_vertices, std::vector<Edge> edges = {}) : n_(num_vertices) {
    if (num_vertices < 0) throw GraphError("negative vertex count");
    std::set<Edge> seen;
    for (auto [a, b] : edges) {
      if (a < 0 || b < 0 || a >= n_ || b >= n_)
        throw GraphError("edge (" + std::to_string(a + 1) + "," + std::to_string(b + 1) + ") out of range");
      if (a == b) throw GraphError("self-loop on vertex " + std::to_string(a + 1));
      Edge e{std::min(a, b), std::max(a, b)};
      if (!seen.insert(e).second)
        throw GraphError("duplicate edge (" + std::to_string(e.first + 1) + "," + std::to_string(e.second + 1) + ")");
      edges_.push_back(e);
    }
  }

  int num_vertices() const noexcept { return n_; }

  /// Optional territory identifiers, one per vertex.
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  void set_labels(std::vector<std::string> labels) {
    if (!labels.empty() && static_cast<int>(labels.size()) != n_) throw GraphError("label count does not match vertex count");
    labels_ = std::move(labels);
  }

  int num_edges() const noexcept { return static_cast<int>(edges_.size()); }
  const std::vector<Edge>& edges() const noexcept { return edges_; }

  std::vector<int> degrees() const {
    std::vector<int> deg(static_cast<std::size_t>(n_), 0);
    for (auto [a, b] : edges_) {
      ++deg[static_cast<std::size_t>(a)];
      ++deg[static_cast<std::size_t>(b)];
    }
    return deg;
  }
  int max_degree() const {
    auto deg = degrees();
    return deg.empty() ? 0 : *std::max_element(deg.begin(), deg.end());
  }

 private:
  int n_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::string> labels_;
};

/// Element of the codomain of L: (D x (T-2), D x T, E x T, D x T).
struct DualVariable {
  Matrix q1, q2, q3, q4;

  static DualVariable zeros(Eigen::Index D, Eigen::Index T, Eigen::Index E) {
    return {Matrix::Zero(D, T - 2), Matrix::Zero(D, T), Matrix::Zero(E, T), Matrix::Zero(D, T)};
  }

  double dot(const DualVariable& o) const {
    return (q1 * o.q1).sum() + (q2 * o.q2).sum() + (q3 * o.q3).sum() + (q4 * o.q4).sum();
  }
  double squared_norm() const { return dot(*this); }

  DualVariable& operator+=(const DualVariable& o) {
    q1 += o.q1;
    q2 += o.q2;
    q3 += o.q3;
    q4 += o.q4;
    return *this;
  }
  DualVariable& operator*=(double s) {
    q1 *= s;
    q2 *= s;
    q3 *= s;
    q4 *= s;
    return *this;
  }
};

// ---------------------------------------------------------------------------
// Linear operators

/// Temporal Laplacian: 0.5 R[t-1] - R[t] + 0.5 R[t+1] for interior days.
inline Matrix d2_apply(const Matrix& r) {
  require_shape(r.cols() >= 3, "d2_apply: need T >= 3");
  const Eigen::Index n = r.cols() - 2;
  return 0.5 * r.leftCols(n) - r.middleCols(1, n) + 0.5 * r.rightCols(n);
}

inline Matrix d2_adjoint(const Matrix& q, Eigen::Index T) {
  require_shape(T >= 3 && q.cols() == T - 2, "d2_adjoint: shape mismatch");
  const Eigen::Index n = T - 2;
  Matrix out = Matrix::Zero(q.rows(), T);
  out.leftCols(n) += 0.5 * q;
  out.middleCols(1, n) -= q;
  out.rightCols(n) += 0.5 * q;
  return out;
}

/// Edge differences R[d1,.] - R[d2,.], one row per stored edge.
inline Matrix graph_apply(const Matrix& r, const EpiGraph& g) {
  if (r.rows() != g.num_vertices()) throw GraphError("graph_apply: graph has " + std::to_string(g.num_vertices()) +
                                                      " vertices, matrix has " + std::to_string(r.rows()) + " rows");
  Matrix out(g.num_edges(), r.cols());
  for (int e = 0; e < g.num_edges(); ++e) {
    auto [a, b] = g.edges()[static_cast<std::size_t>(e)];
    out.row(e) = r.row(a) - r.row(b);
  }
  return out;
}

inline Matrix graph_adjoint(const Matrix& q, const EpiGraph& g) {
  if (q.rows() != g.num_edges()) throw GraphError("graph_adjoint: edge count mismatch");
  Matrix out = Matrix::Zero(g.num_vertices(), q.cols());
  for (int e = 0; e < g.num_edges(); ++e) {
    auto [a, b] = g.edges()[static_cast<std::size_t>(e)];
    out.row(a) += q.row(e);
    out.row(b) -= q.row(e);
  }
  return out;
}

/// L(R, O) = (lambda_T D2 R, R, lambda_S G R, lambda_O O). With pinned
/// outliers the O block is dropped (q4 = 0).
inline DualVariable l_apply(const Matrix& r, const Matrix& o, const EpiGraph& g, const Hyperparameters& h) {
  require_shape(r.rows() == o.rows() && r.cols() == o.cols(), "l_apply: R and O shapes differ");
  DualVariable q;
  q.q1 = h.lambda_t * d2_apply(r);
  q.q2 = r;
  q.q3 = h.lambda_s * graph_apply(r, g);
  q.q4 = h.outliers_pinned() ? Matrix::Zero(o.rows(), o.cols()) : Matrix(h.lambda_o * o);
  return q;
}

inline std::pair<Matrix, Matrix> l_adjoint(const DualVariable& q, const EpiGraph& g, const Hyperparameters& h) {
  const Eigen::Index T = q.q2.cols();
  Matrix r = h.lambda_t * d2_adjoint(q.q1, T) + q.q2 + h.lambda_s * graph_adjoint(q.q3, g);
  Matrix o = h.outliers_pinned() ? Matrix::Zero(q.q4.rows(), q.q4.cols()) : Matrix(h.lambda_o * q.q4);
  return {std::move(r), std::move(o)};
}

// ---------------------------------------------------------------------------
// Norms

struct PowerIterationResult {
  double value = 0.0;  // largest singular value estimate
  int iterations = 0;
  bool converged = false;
};

/// Largest singular value of a linear map by power iteration on A*A.
/// The start vector is deterministic.
inline PowerIterationResult power_iteration(const std::function<Vector(const Vector&)>& apply,
                                            const std::function<Vector(const Vector&)>& adjoint,
                                            Eigen::Index dim, double tol = 1e-10, int max_iter = 10000) {
  if (!(tol > 0.0)) throw ParameterError("power_iteration: tol must be > 0");
  PowerIterationResult res;
  if (dim == 0) {
    res.converged = true;
    return res;
  }
  Vector x(dim);
  for (Eigen::Index i = 0; i < dim; ++i) x[i] = 1.0 + 0.5 * std::sin(1.0 + 0.7 * static_cast<double>(i));
  x.normalize();
  double prev = 0.0;
  for (int k = 1; k <= max_iter; ++k) {
    Vector y = adjoint(apply(x));
    const double lam = y.norm();  // ||A*A x|| with ||x|| = 1
    res.iterations = k;
    if (lam == 0.0) {
      res.value = 0.0;
      res.converged = true;
      return res;
    }
    x = y / lam;
    res.value = std::sqrt(lam);
    if (k > 1 && std::abs(lam - prev) <= tol * lam) {
      res.converged = true;
      return res;
    }
    prev = lam;
  }
  return res;
}

/// ||G||_op^2 by power iteration on the graph Laplacian G*G.
inline double graph_norm_sq(const EpiGraph& g, double tol = 1e-10, int max_iter = 20000) {
  if (g.num_edges() == 0) return 0.0;
  const int n = g.num_vertices();
  auto apply = [&](const Vector& x) {
    Vector y(g.num_edges());
    for (int e = 0; e < g.num_edges(); ++e) y[e] = x[g.edges()[e].first] - x[g.edges()[e].second];
    return y;
  };
  auto adjoint = [&](const Vector& y) {
    Vector x = Vector::Zero(n);
    for (int e = 0; e < g.num_edges(); ++e) {
      x[g.edges()[e].first] += y[e];
      x[g.edges()[e].second] -= y[e];
    }
    return x;
  };
  const double s = power_iteration(apply, adjoint, n, tol, max_iter).value;
  return std::min(s * s, 2.0 * g.max_degree());
}

inline constexpr double kD2NormSqBound = 4.0;

/// Upper bound on ||L||_op^2:
///   max{lambda_T^2 ||D2||^2 + lambda_S^2 ||G||^2 + 1, lambda_O^2}.
/// The O block is absent when outliers are pinned.
inline double op_norm_bound(const Hyperparameters& h, double d2_norm_sq = kD2NormSqBound, double g_norm_sq = 0.0) {
  if (d2_norm_sq < 0.0 || g_norm_sq < 0.0) throw ParameterError("op_norm_bound: negative norm");
  const double r_block = h.lambda_t * h.lambda_t * d2_norm_sq + h.lambda_s * h.lambda_s * g_norm_sq + 1.0;
  const double o_block = h.outliers_pinned() ? 0.0 : h.lambda_o * h.lambda_o;
  return std::max(r_block, o_block);
}

// ---------------------------------------------------------------------------
// Proximal operators

inline double prox_soft_threshold(double q, double s) {
  return std::copysign(std::max(std::abs(q) - s, 0.0), q);
}

inline double prox_nonneg(double q) { return std::max(0.0, q); }

/// prox of tau * d_KL(z | .) at p.
inline double prox_kl_scalar(double p, double z, double tau) {
  const double a = p - tau;
  const double disc = std::sqrt(a * a + 4.0 * tau * z);
  // Cancellation-free branch for a > 0.
  if (a > 0.0) return 0.5 * (a + disc);
  const double denom = disc - a;
  return denom > 0.0 ? 2.0 * tau * z / denom : 0.0;
}

/// prox of tau * f(., . | z, phiz), f(r, o) = d_KL(z | r phiz + o), with the
/// indicator of {(0,0)} when z = phiz = 0.
inline std::pair<double, double> prox_f(double r, double o, double z, double phiz, double tau) {
  if (z == 0.0 && phiz == 0.0) return {0.0, 0.0};
  const double beta = phiz * phiz + 1.0;
  const double s = r * phiz + o;
  const double resid = (s - prox_kl_scalar(s, z, tau * beta)) / beta;
  return {r - phiz * resid, o - resid};
}

/// prox of tau * d_KL(z | r phiz) in r alone (outliers pinned to zero).
/// Entries with phiz = 0 < z carry no information on r and are left as is.
inline double prox_f_pinned(double r, double z, double phiz, double tau) {
  if (phiz == 0.0) return z == 0.0 ? 0.0 : r;
  const double beta = phiz * phiz;
  return prox_kl_scalar(r * phiz, z, tau * beta) / phiz;
}

/// prox of sigma H* (Moreau identity worked out per block): the l1 blocks are
/// clipped to [-1, 1], the positivity block to (-inf, 0]. Independent of sigma.
inline DualVariable prox_h_conj(DualVariable q, double sigma) {
  if (!(sigma > 0.0)) throw ParameterError("prox_h_conj: sigma must be > 0");
  q.q1 = q.q1.max(-1.0).min(1.0);
  q.q2 = q.q2.min(0.0);
  q.q3 = q.q3.max(-1.0).min(1.0);
  q.q4 = q.q4.max(-1.0).min(1.0);
  return q;
}

/// prox of H / sigma at x, blockwise.
inline DualVariable prox_h_scaled(DualVariable x, double sigma) {
  if (!(sigma > 0.0)) throw ParameterError("prox_h_scaled: sigma must be > 0");
  const double s = 1.0 / sigma;
  auto soft = [s](const Matrix& m) { return m.unaryExpr([s](double v) { return prox_soft_threshold(v, s); }).eval(); };
  x.q1 = soft(x.q1);
  x.q2 = x.q2.max(0.0);
  x.q3 = soft(x.q3);
  x.q4 = soft(x.q4);
  return x;
}

}  // namespace rrt
