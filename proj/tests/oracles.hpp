// Independent reference computations used as test oracles. Nothing here calls
// into the library code paths it checks.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <random>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "rootkgd/kgraph.hpp"

namespace oracle {

/// Cyclic Jacobi rotations on a symmetric matrix. Returns eigenvalues sorted
/// descending and the matching eigenvectors as columns.
inline std::pair<Eigen::VectorXd, Eigen::MatrixXd> jacobi_eigen(Eigen::MatrixXd a) {
  const Eigen::Index n = a.rows();
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-30) break;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::sort(order.begin(), order.end(), [&a](auto i, auto j) { return a(i, i) > a(j, j); });
  Eigen::VectorXd values(n);
  Eigen::MatrixXd vectors(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    values(k) = a(order[static_cast<std::size_t>(k)], order[static_cast<std::size_t>(k)]);
    vectors.col(k) = v.col(order[static_cast<std::size_t>(k)]);
  }
  return {values, vectors};
}

/// Sample covariance of z-scored columns, computed with explicit loops.
inline Eigen::MatrixXd standardized_covariance(const Eigen::MatrixXd& x) {
  const Eigen::Index m = x.rows(), n = x.cols();
  std::vector<double> mean(static_cast<std::size_t>(n), 0.0), sd(static_cast<std::size_t>(n), 0.0);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < m; ++i) mean[j] += x(i, j);
    mean[j] /= static_cast<double>(m);
    for (Eigen::Index i = 0; i < m; ++i) sd[j] += (x(i, j) - mean[j]) * (x(i, j) - mean[j]);
    sd[j] = std::sqrt(sd[j] / static_cast<double>(m - 1));
  }
  Eigen::MatrixXd s(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b < n; ++b) {
      double acc = 0.0;
      for (Eigen::Index i = 0; i < m; ++i) {
        acc += (x(i, a) - mean[a]) / sd[a] * (x(i, b) - mean[b]) / sd[b];
      }
      s(a, b) = acc / static_cast<double>(m - 1);
    }
  }
  return s;
}

/// Golden-section minimisation of a unimodal function on [lo, hi].
inline double golden_min(const std::function<double(double)>& f, double lo, double hi, int iters = 200) {
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - r * (b - a), d = a + r * (b - a);
  double fc = f(c), fd = f(d);
  for (int i = 0; i < iters && (b - a) > 1e-15 * (1.0 + std::abs(a) + std::abs(b)); ++i) {
    if (fc < fd) {
      b = d; d = c; fd = fc; c = b - r * (b - a); fc = f(c);
    } else {
      a = c; c = d; fc = fd; d = a + r * (b - a); fd = f(d);
    }
  }
  return std::min({fc, fd, f(0.5 * (a + b))});
}

/// Linear factor model with per-column offsets and scales, for drawing
/// correlated datasets with known structure.
struct FactorModel {
  Eigen::MatrixXd load;  // factors x n
  Eigen::VectorXd offset;
  Eigen::VectorXd scale;
  double noise = 0.3;

  FactorModel(std::mt19937_64& rng, Eigen::Index n, Eigen::Index factors, double noise_level) : noise(noise_level) {
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    load.resize(factors, n);
    for (Eigen::Index f = 0; f < factors; ++f)
      for (Eigen::Index j = 0; j < n; ++j) load(f, j) = u(rng);
    offset.resize(n);
    scale.resize(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      offset(j) = 10.0 * u(rng);
      scale(j) = std::exp(u(rng));
    }
  }

  Eigen::MatrixXd sample(std::mt19937_64& rng, Eigen::Index m) const {
    std::normal_distribution<double> z(0.0, 1.0);
    const Eigen::Index n = offset.size();
    Eigen::MatrixXd x(m, n);
    for (Eigen::Index i = 0; i < m; ++i) {
      Eigen::VectorXd latent(load.rows());
      for (Eigen::Index f = 0; f < load.rows(); ++f) latent(f) = z(rng);
      for (Eigen::Index j = 0; j < n; ++j) {
        x(i, j) = offset(j) + scale(j) * (latent.dot(load.col(j)) + noise * z(rng));
      }
    }
    return x;
  }
};

inline Eigen::MatrixXd factor_data(std::mt19937_64& rng, Eigen::Index m, Eigen::Index n, Eigen::Index factors,
                                   double noise) {
  FactorModel model(rng, n, factors, noise);
  return model.sample(rng, m);
}

/// PCA rebuilt from scratch: loop-based statistics, Jacobi eigenvectors and
/// explicit sums for every statistic.
struct ReferencePca {
  Eigen::VectorXd mean, sd, values;
  Eigen::MatrixXd vectors;
  Eigen::Index k = 0;

  ReferencePca(const Eigen::MatrixXd& x, double r_pc) {
    const Eigen::Index m = x.rows(), n = x.cols();
    mean = Eigen::VectorXd::Zero(n);
    sd = Eigen::VectorXd::Zero(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index i = 0; i < m; ++i) mean(j) += x(i, j);
      mean(j) /= static_cast<double>(m);
      for (Eigen::Index i = 0; i < m; ++i) sd(j) += (x(i, j) - mean(j)) * (x(i, j) - mean(j));
      sd(j) = std::sqrt(sd(j) / static_cast<double>(m - 1));
    }
    std::tie(values, vectors) = jacobi_eigen(standardized_covariance(x));
    double total = 0.0, acc = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) total += values(j);
    for (k = 0; k < n;) {
      acc += values(k++);
      if (acc >= r_pc * total * (1.0 - 1e-12)) break;
    }
  }

  Eigen::VectorXd z(const Eigen::VectorXd& raw) const {
    Eigen::VectorXd out(raw.size());
    for (Eigen::Index j = 0; j < raw.size(); ++j) out(j) = (raw(j) - mean(j)) / sd(j);
    return out;
  }

  /// ||z - sum_{j<k} p_j p_j^T z||^2 on an already standardized vector.
  double spe_z(const Eigen::VectorXd& zv) const {
    Eigen::VectorXd recon = Eigen::VectorXd::Zero(zv.size());
    for (Eigen::Index j = 0; j < k; ++j) recon += vectors.col(j).dot(zv) * vectors.col(j);
    return (zv - recon).squaredNorm();
  }

  /// sum_{j<k} (p_j^T z)^2 / lambda_j on an already standardized vector.
  double t2_z(const Eigen::VectorXd& zv) const {
    double t = 0.0;
    for (Eigen::Index j = 0; j < k; ++j) {
      const double s = vectors.col(j).dot(zv);
      t += s * s / values(j);
    }
    return t;
  }

  /// Reduction of `stat` achieved by the best scalar reconstruction along
  /// coordinate i, located by golden-section search.
  double reconstruction_gain(const Eigen::VectorXd& zv, Eigen::Index i, bool use_t2) const {
    auto f = [&](double a) {
      Eigen::VectorXd y = zv;
      y(i) -= a;
      return use_t2 ? t2_z(y) : spe_z(y);
    };
    const double base = f(0.0);
    // Convexity: once both ends of [-bound, bound] are no lower than f(0),
    // the minimiser lies inside.
    double bound = 1.0;
    while (bound < 1e12 && (f(bound) < base || f(-bound) < base)) bound *= 2.0;
    return base - golden_min(f, -bound, bound, 400);
  }
};

/// Literal propagation over the raw triple list: a plain vector as the
/// pending set, linear scans for the next item and for each head's edges.
struct ReferenceResult {
  std::map<std::string, double> quantity;
  std::size_t pops = 0;
};

inline ReferenceResult reference_propagate(const rootkgd::kg::GraphData& g, const std::string& source,
                                           double s0, double sigma, long p_max, double eps) {
  std::map<std::string, const rootkgd::kg::RelationType*> rel;
  for (const auto& r : g.relations) rel[r.name] = &r;
  ReferenceResult out;
  std::map<std::string, long> received, initiated;
  for (const auto& e : g.entities) {
    out.quantity[e.id] = 0.0;
    received[e.id] = 0;
    initiated[e.id] = 0;
  }
  out.quantity[source] = s0;
  received[source] = 1;
  std::vector<std::tuple<long, std::size_t, std::string>> pending{{0, 0, source}};
  std::size_t seq = 1;
  while (!pending.empty()) {
    auto it = std::min_element(pending.begin(), pending.end());
    auto [prio, ignored, head] = *it;
    pending.erase(it);
    ++out.pops;
    if (++initiated[head] > p_max) continue;
    std::vector<std::tuple<double, std::string, std::string>> edges;
    for (const auto& t : g.triples) {
      if (t.head == head) edges.emplace_back(rel[t.relation]->distance, t.tail, t.relation);
    }
    std::sort(edges.begin(), edges.end());
    for (const auto& [d, tail, r] : edges) {
      const double delta = out.quantity[head] / static_cast<double>(received[head]) * std::exp(-sigma * d);
      if (delta < eps * s0) continue;
      out.quantity[tail] += delta;
      ++received[tail];
      pending.emplace_back(prio + rel[r]->priority_offset, seq++, tail);
    }
  }
  return out;
}

/// Random graph with `n` device entities and up to `edges` distinct triples
/// over three relations with random parameters.
inline rootkgd::kg::GraphData random_graph(std::mt19937_64& rng, int n, int edges) {
  rootkgd::kg::GraphData g;
  for (int i = 0; i < n; ++i) {
    g.entities.push_back({"n" + std::to_string(i), rootkgd::kg::EntityKind::Device, "", std::nullopt});
  }
  std::uniform_real_distribution<double> dist(0.0, 6.0);
  std::uniform_int_distribution<long> off(0, 4);
  for (int r = 0; r < 3; ++r) g.relations.push_back({"r" + std::to_string(r), dist(rng), off(rng)});
  std::uniform_int_distribution<int> node(0, n - 1), rel(0, 2);
  std::set<std::tuple<int, int, int>> seen;
  for (int k = 0; k < edges; ++k) {
    const int h = node(rng), t = node(rng), r = rel(rng);
    if (!seen.insert({h, r, t}).second) continue;
    g.triples.push_back({"n" + std::to_string(h), "r" + std::to_string(r), "n" + std::to_string(t)});
  }
  return g;
}

}  // namespace oracle
