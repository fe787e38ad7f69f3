#ifndef REGOPT_PROBLEMS_HPP
#define REGOPT_PROBLEMS_HPP

#include <cmath>
#include <cstdint>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "regopt/linops.hpp"
#include "regopt/objective.hpp"
#include "regopt/regularizers.hpp"
#include "regopt/rng.hpp"

namespace regopt {

struct ProblemMetadata {
  std::string family;
  Eigen::Index m = 0;
  Eigen::Index n = 0;
  Eigen::Index k_sparse = 0;
  Eigen::Index rank = 0;
  double lambda = 0.0;
  std::uint64_t seed = 0;
};

/// A generated experiment instance: smooth term, nonsmooth term, starting
/// point, and (when planted) the ground truth.  Instances are deterministic
/// functions of their parameters and seed.
struct ProblemInstance {
  SmoothObjective objective;
  std::unique_ptr<Regularizer> regularizer;
  Eigen::VectorXd x0;
  Eigen::VectorXd ground_truth;  ///< empty when the family plants none
  ProblemMetadata meta;
};

// ---------------------------------------------------------------------------
// file ingestion (plain CSV and PGM; formats documented in the README)
// ---------------------------------------------------------------------------

inline Eigen::MatrixXd load_csv_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open CSV file: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw std::runtime_error("malformed numeric value in " + path + ": '" + cell + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw std::runtime_error("ragged rows in CSV file: " + path);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error("empty CSV file: " + path);
  Eigen::MatrixXd M(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(rows.front().size()));
  for (Eigen::Index i = 0; i < M.rows(); ++i)
    for (Eigen::Index j = 0; j < M.cols(); ++j)
      M(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return M;
}

inline Eigen::VectorXd load_csv_vector(const std::string& path) {
  Eigen::MatrixXd M = load_csv_matrix(path);
  if (M.cols() != 1) throw std::runtime_error("expected a single-column CSV file: " + path);
  return M.col(0);
}

/// Grayscale image as a column-major side x side vector with values in
/// [0, 1].  Accepts P2/P5 PGM or a CSV of side^2 values.
inline Eigen::VectorXd load_image(const std::string& path, Eigen::Index side) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw std::runtime_error("cannot open image file: " + path);
  std::string magic;
  probe >> magic;
  if (magic == "P2" || magic == "P5") {
    auto next_token = [&probe, &path]() -> long {
      std::string tok;
      while (probe >> tok) {
        if (tok[0] == '#') {
          std::string rest;
          std::getline(probe, rest);
          continue;
        }
        return std::stol(tok);
      }
      throw std::runtime_error("truncated PGM header: " + path);
    };
    const long w = next_token();
    const long hgt = next_token();
    const long maxval = next_token();
    if (w != side || hgt != side)
      throw std::runtime_error("PGM dimensions do not match requested side: " + path);
    if (maxval <= 0 || maxval > 65535) throw std::runtime_error("bad PGM maxval: " + path);
    Eigen::MatrixXd img(side, side);
    if (magic == "P2") {
      for (Eigen::Index i = 0; i < side; ++i)
        for (Eigen::Index j = 0; j < side; ++j) img(i, j) = static_cast<double>(next_token());
    } else {
      probe.get();  // single whitespace after maxval
      const int bytes = maxval > 255 ? 2 : 1;
      for (Eigen::Index i = 0; i < side; ++i)
        for (Eigen::Index j = 0; j < side; ++j) {
          long v = 0;
          for (int byte = 0; byte < bytes; ++byte) {
            const int ch = probe.get();
            if (ch < 0) throw std::runtime_error("truncated PGM data: " + path);
            v = v * 256 + ch;
          }
          img(i, j) = static_cast<double>(v);
        }
    }
    img /= static_cast<double>(maxval);
    return Eigen::Map<const Eigen::VectorXd>(img.data(), side * side);
  }
  const Eigen::VectorXd v = load_csv_vector(path);
  if (v.size() != side * side)
    throw std::runtime_error("image CSV does not hold side^2 values: " + path);
  return v;
}

// ---------------------------------------------------------------------------
// basis pursuit denoise:  min (1/2)||A x - b||^2 + lambda ||x||_0
// ---------------------------------------------------------------------------

/// A has orthonormal rows; the true signal has k_sparse standard-normal
/// entries at seeded positions; b = A x_true + noise;
/// lambda = 0.1 ||A^T b||_inf; x0 is a seeded dense Gaussian vector.
inline ProblemInstance bpdn_generate(Eigen::Index m, Eigen::Index n, Eigen::Index k_sparse,
                                     double noise_std, std::uint64_t seed) {
  if (m < 1 || m > n) throw std::invalid_argument("bpdn_generate: need 1 <= m <= n");
  if (k_sparse < 0 || k_sparse > n)
    throw std::invalid_argument("bpdn_generate: need 0 <= k_sparse <= n");
  Rng master(seed);
  const std::uint64_t seed_A = master.next_u64();
  Rng rng(master.next_u64());

  const LinearMap A = random_orthonormal_rows(m, n, seed_A);

  Eigen::VectorXd x_true = Eigen::VectorXd::Zero(n);
  for (const Eigen::Index i : rng.sample_without_replacement(n, k_sparse))
    x_true[i] = rng.normal();
  Eigen::VectorXd b = A.apply(x_true);
  for (Eigen::Index i = 0; i < m; ++i) b[i] += noise_std * rng.normal();
  const double lambda = 0.1 * A.apply_adjoint(b).lpNorm<Eigen::Infinity>();
  const Eigen::VectorXd x0 = rng.normal_vector(n);

  auto counters = std::make_shared<EvalCounters>();
  const LinearMap Ac = counted_map(A, counters);
  auto f = [Ac, b](const Eigen::VectorXd& x) { return 0.5 * (Ac.apply(x) - b).squaredNorm(); };
  auto grad = [Ac, b](const Eigen::VectorXd& x) {
    return Ac.apply_adjoint(Ac.apply(x) - b);
  };
  SmoothObjective obj(n, std::move(f), std::move(grad), counters);
  obj.set_residual(
      m, [Ac, b](const Eigen::VectorXd& x) -> Eigen::VectorXd { return Ac.apply(x) - b; },
      [Ac](const Eigen::VectorXd&) { return Ac; });

  ProblemMetadata meta{"bpdn", m, n, k_sparse, 0, lambda, seed};
  return ProblemInstance{std::move(obj), std::make_unique<L0Norm>(lambda), x0, x_true, meta};
}

// ---------------------------------------------------------------------------
// matrix completion:  min (1/2)||P_Omega(X - M)||_F^2 + lambda h(X)
// ---------------------------------------------------------------------------

enum class MatrixRegularizer { rank, nuclear };

/// X_r = U V^T has exact rank `rank`; M mixes X_r with Gaussian noise and
/// outliers, M = (1-c)(X_r + N(0, sa^2)) + c(X_r + N(0, sb^2)); Omega is a
/// seeded uniform sample of ceil(obs_fraction n^2) entries.  Matrices are
/// handled as column-major n^2 vectors.
inline ProblemInstance mc_generate(Eigen::Index n, Eigen::Index rank, double c, double sigma_a,
                                   double sigma_b, double obs_fraction, MatrixRegularizer kind,
                                   double lambda, std::uint64_t seed) {
  if (n < 1 || rank < 1 || rank > n) throw std::invalid_argument("mc_generate: need 1 <= rank <= n");
  if (!(c >= 0.0 && c <= 1.0)) throw std::invalid_argument("mc_generate: need 0 <= c <= 1");
  if (!(obs_fraction > 0.0 && obs_fraction <= 1.0))
    throw std::invalid_argument("mc_generate: need 0 < obs_fraction <= 1");
  Rng rng(seed);

  Eigen::MatrixXd U(n, rank), V(n, rank);
  for (Eigen::Index j = 0; j < rank; ++j)
    for (Eigen::Index i = 0; i < n; ++i) U(i, j) = rng.normal();
  for (Eigen::Index j = 0; j < rank; ++j)
    for (Eigen::Index i = 0; i < n; ++i) V(i, j) = rng.normal();
  const Eigen::MatrixXd Xr = (U * V.transpose()) / std::sqrt(static_cast<double>(rank));

  Eigen::MatrixXd Ma = Xr, Mb = Xr;
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) Ma(i, j) += sigma_a * rng.normal();
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) Mb(i, j) += sigma_b * rng.normal();
  const Eigen::MatrixXd M = (1.0 - c) * Ma + c * Mb;

  const auto n_obs = static_cast<Eigen::Index>(std::ceil(obs_fraction * static_cast<double>(n * n)));
  std::vector<std::pair<Eigen::Index, Eigen::Index>> omega;
  omega.reserve(static_cast<std::size_t>(n_obs));
  for (const Eigen::Index idx : rng.sample_without_replacement(n * n, n_obs))
    omega.emplace_back(idx % n, idx / n);
  const LinearMap P = entry_mask(n, n, omega);

  const Eigen::VectorXd m_vec = Eigen::Map<const Eigen::VectorXd>(M.data(), n * n);
  const Eigen::VectorXd x0 = rng.normal_vector(n * n);

  auto counters = std::make_shared<EvalCounters>();
  const LinearMap Pc = counted_map(P, counters);
  auto f = [Pc, m_vec](const Eigen::VectorXd& x) {
    return 0.5 * Pc.apply(x - m_vec).squaredNorm();
  };
  auto grad = [Pc, m_vec](const Eigen::VectorXd& x) {
    return Pc.apply_adjoint(Pc.apply(x - m_vec));
  };
  SmoothObjective obj(n * n, std::move(f), std::move(grad), counters);
  obj.set_residual(
      n * n,
      [Pc, m_vec](const Eigen::VectorXd& x) -> Eigen::VectorXd { return Pc.apply(x - m_vec); },
      [Pc](const Eigen::VectorXd&) { return Pc; });

  std::unique_ptr<Regularizer> h;
  if (kind == MatrixRegularizer::rank)
    h = std::make_unique<RankPenalty>(n, n, lambda);
  else
    h = std::make_unique<NuclearNorm>(n, n, lambda);

  ProblemMetadata meta{"mc", n, n, 0, rank, lambda, seed};
  return ProblemInstance{std::move(obj), std::move(h),
                         x0, Eigen::Map<const Eigen::VectorXd>(Xr.data(), n * n), meta};
}

// ---------------------------------------------------------------------------
// nonlinear SVM:  min (1/2)||1 - tanh(b .* (A x))||^2 + lambda ||x||_0
// ---------------------------------------------------------------------------

namespace detail {

inline ProblemInstance svm_build(Eigen::MatrixXd A, Eigen::VectorXd labels, double lambda,
                                 Eigen::VectorXd x0, Eigen::VectorXd w_true, std::uint64_t seed) {
  const Eigen::Index m = A.rows(), n = A.cols();
  for (Eigen::Index i = 0; i < m; ++i)
    if (labels[i] != 1.0 && labels[i] != -1.0)
      throw std::runtime_error("svm: labels must be -1 or +1");
  auto Ap = std::make_shared<Eigen::MatrixXd>(std::move(A));
  auto bp = std::make_shared<Eigen::VectorXd>(std::move(labels));
  auto f = [Ap, bp](const Eigen::VectorXd& x) {
    const Eigen::ArrayXd t = ((*Ap) * x).array() * bp->array();
    return 0.5 * (1.0 - t.tanh()).square().sum();
  };
  auto grad = [Ap, bp](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    const Eigen::ArrayXd t = (((*Ap) * x).array() * bp->array()).tanh();
    const Eigen::ArrayXd w = -bp->array() * (1.0 - t) * (1.0 - t.square());
    return Ap->transpose() * w.matrix();
  };
  SmoothObjective obj(n, std::move(f), std::move(grad));
  ProblemMetadata meta{"svm", m, n, w_true.size() > 0 ? (w_true.array() != 0.0).count() : 0, 0,
                       lambda, seed};
  return ProblemInstance{std::move(obj), std::make_unique<L0Norm>(lambda), std::move(x0),
                         std::move(w_true), meta};
}

}  // namespace detail

/// Synthetic instance: Gaussian features, a planted sparse separator with
/// ~n/10 nonzeros, labels sign(A w_true) with 5% seeded flips.
inline ProblemInstance svm_generate(Eigen::Index m, Eigen::Index n, double lambda,
                                    std::uint64_t seed) {
  if (m < 1 || n < 1) throw std::invalid_argument("svm_generate: need m, n >= 1");
  Rng rng(seed);
  Eigen::MatrixXd A(m, n);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < n; ++j) A(i, j) = rng.normal();
  Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
  const Eigen::Index k = std::max<Eigen::Index>(1, n / 10);
  for (const Eigen::Index i : rng.sample_without_replacement(n, k)) w[i] = rng.normal();
  Eigen::VectorXd labels(m);
  const Eigen::VectorXd scores = A * w;
  for (Eigen::Index i = 0; i < m; ++i) {
    labels[i] = scores[i] < 0.0 ? -1.0 : 1.0;
    if (rng.uniform() < 0.05) labels[i] = -labels[i];
  }
  Eigen::VectorXd x0 = rng.normal_vector(n);
  return detail::svm_build(std::move(A), std::move(labels), lambda, std::move(x0), std::move(w),
                           seed);
}

/// Instance from dense CSV data: features (m x n) and labels (m, values
/// -1/+1).  x0 is a seeded Gaussian vector.
inline ProblemInstance svm_generate(const std::string& features_path,
                                    const std::string& labels_path, double lambda,
                                    std::uint64_t seed) {
  Eigen::MatrixXd A = load_csv_matrix(features_path);
  Eigen::VectorXd labels = load_csv_vector(labels_path);
  if (labels.size() != A.rows())
    throw std::runtime_error("svm: feature/label row counts differ");
  Rng rng(seed);
  Eigen::VectorXd x0 = rng.normal_vector(A.cols());
  return detail::svm_build(std::move(A), std::move(labels), lambda, std::move(x0),
                           Eigen::VectorXd(), seed);
}

// ---------------------------------------------------------------------------
// denoise/deblur:  min sum_i log((A x - b)_i^2 + 1) + lambda ||x||_1
// ---------------------------------------------------------------------------

namespace detail {

/// Seeded piecewise-constant test image: a handful of overlapping constant
/// rectangles, clipped to [0, 1].
inline Eigen::VectorXd piecewise_constant_image(Eigen::Index side, Rng& rng) {
  Eigen::MatrixXd img = Eigen::MatrixXd::Zero(side, side);
  for (int block = 0; block < 5; ++block) {
    Eigen::Index i0 = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(side)));
    Eigen::Index i1 = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(side)));
    Eigen::Index j0 = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(side)));
    Eigen::Index j1 = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(side)));
    if (i1 < i0) std::swap(i0, i1);
    if (j1 < j0) std::swap(j0, j1);
    const double level = rng.uniform(0.2, 1.0);
    img.block(i0, j0, i1 - i0 + 1, j1 - j0 + 1).setConstant(level);
  }
  return Eigen::Map<const Eigen::VectorXd>(img.data(), side * side);
}

inline ProblemInstance denoise_build(Eigen::Index side, double lambda, int kernel_radius,
                                     double kernel_sigma, double noise_std,
                                     Eigen::VectorXd x_star, Rng& rng, std::uint64_t seed) {
  const LinearMap A = blur_operator(side, kernel_radius, kernel_sigma);
  Eigen::VectorXd b = A.apply(x_star);
  for (Eigen::Index i = 0; i < b.size(); ++i) b[i] += noise_std * rng.normal();
  auto f = [A, b](const Eigen::VectorXd& x) {
    return (A.apply(x) - b).array().square().log1p().sum();
  };
  auto grad = [A, b](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    const Eigen::ArrayXd r = (A.apply(x) - b).array();
    return A.apply_adjoint((2.0 * r / (r.square() + 1.0)).matrix());
  };
  SmoothObjective obj(side * side, std::move(f), std::move(grad));
  ProblemMetadata meta{"denoise", side, side * side, 0, 0, lambda, seed};
  // the observed image is the natural starting point
  return ProblemInstance{std::move(obj), std::make_unique<L1Norm>(lambda), b, std::move(x_star),
                         meta};
}

}  // namespace detail

/// Synthetic instance blurring a seeded piecewise-constant image.
inline ProblemInstance denoise_generate(Eigen::Index side, double lambda, int kernel_radius,
                                        double kernel_sigma, double noise_std,
                                        std::uint64_t seed) {
  if (side < 2) throw std::invalid_argument("denoise_generate: need side >= 2");
  Rng rng(seed);
  Eigen::VectorXd x_star = detail::piecewise_constant_image(side, rng);
  return detail::denoise_build(side, lambda, kernel_radius, kernel_sigma, noise_std,
                               std::move(x_star), rng, seed);
}

/// Instance from an image file (PGM or CSV, grayscale in [0, 1]).
inline ProblemInstance denoise_generate(Eigen::Index side, double lambda, int kernel_radius,
                                        double kernel_sigma, double noise_std,
                                        const std::string& image_path, std::uint64_t seed) {
  if (side < 2) throw std::invalid_argument("denoise_generate: need side >= 2");
  Rng rng(seed);
  Eigen::VectorXd x_star = load_image(image_path, side);
  return detail::denoise_build(side, lambda, kernel_radius, kernel_sigma, noise_std,
                               std::move(x_star), rng, seed);
}

}  // namespace regopt

#endif  // REGOPT_PROBLEMS_HPP
