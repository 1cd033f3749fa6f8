#include "bhin/balance.hpp"

#include <algorithm>
#include <vector>

#include "bhin/error.hpp"

namespace bhin {

namespace {

void check_shapes(const Matrix& p, const StochasticMatrix& uniform, const TaskTensor& ratio,
                  const PerturbationConfig& cfg) {
  const auto t = static_cast<Eigen::Index>(uniform.type_count());
  if (p.rows() != t || p.cols() != t) {
    throw Error(ErrorKind::kShapeMismatch, "P and P_uni differ in shape");
  }
  if (ratio.shape.hops != cfg.hops || ratio.shape.types != uniform.type_count()) {
    throw Error(ErrorKind::kShapeMismatch, "ratio tensor is not k x |T| x |T|");
  }
}

Matrix ratio_slice(const TaskTensor& ratio, std::size_t hop) {
  const auto t = static_cast<Eigen::Index>(ratio.shape.types);
  Matrix m(t, t);
  for (Eigen::Index x = 0; x < t; ++x)
    for (Eigen::Index y = 0; y < t; ++y)
      m(x, y) = ratio.values[ratio.shape.index(hop, static_cast<TypeId>(x), static_cast<TypeId>(y))];
  return m;
}

// Residual P^{i+1} - target_i for every hop, together with powers P^0..P^k.
struct Residuals {
  std::vector<Matrix> powers;
  std::vector<Matrix> residuals;
};

Residuals residuals(const Matrix& p, const StochasticMatrix& uniform, const TaskTensor& ratio,
                    const PerturbationConfig& cfg) {
  const auto t = p.rows();
  Residuals r;
  r.powers.reserve(cfg.hops + 1);
  r.powers.push_back(Matrix::Identity(t, t));
  Matrix uni_power = Matrix::Identity(t, t);
  const Matrix ones = Matrix::Ones(t, t);
  for (std::size_t i = 0; i < cfg.hops; ++i) {
    r.powers.push_back(r.powers.back() * p);
    uni_power = uni_power * uniform.values();
    r.residuals.push_back(r.powers.back() - (uni_power + cfg.alpha * (ratio_slice(ratio, i) - ones)));
  }
  return r;
}

}  // namespace

double stochastic_loss(const Matrix& p, const StochasticMatrix& uniform, const TaskTensor& ratio,
                       const PerturbationConfig& cfg) {
  check_shapes(p, uniform, ratio, cfg);
  double loss = 0.0;
  for (const Matrix& r : residuals(p, uniform, ratio, cfg).residuals) loss += r.squaredNorm();
  return loss;
}

Matrix stochastic_loss_gradient(const Matrix& p, const StochasticMatrix& uniform,
                                const TaskTensor& ratio, const PerturbationConfig& cfg) {
  check_shapes(p, uniform, ratio, cfg);
  const Residuals r = residuals(p, uniform, ratio, cfg);
  Matrix grad = Matrix::Zero(p.rows(), p.cols());
  // <R, P^a dP P^b> = <(P^a)^T R (P^b)^T, dP>
  for (std::size_t i = 0; i < cfg.hops; ++i) {
    const std::size_t n = i + 1;
    for (std::size_t a = 0; a < n; ++a) {
      const std::size_t b = n - 1 - a;
      grad.noalias() += 2.0 * r.powers[a].transpose() * r.residuals[i] * r.powers[b].transpose();
    }
  }
  const MetaNetwork& support = uniform.support();
  for (Eigen::Index x = 0; x < grad.rows(); ++x)
    for (Eigen::Index y = 0; y < grad.cols(); ++y)
      if (!support.adjacent(static_cast<TypeId>(x), static_cast<TypeId>(y))) grad(x, y) = 0.0;
  return grad;
}

StochasticMatrix apply_stochastic_update(const StochasticMatrix& p, const Matrix& grad,
                                         const PerturbationConfig& cfg) {
  const MetaNetwork& support = p.support();
  const auto t = static_cast<Eigen::Index>(p.type_count());
  if (grad.rows() != t || grad.cols() != t) throw Error(ErrorKind::kShapeMismatch, "gradient shape");
  Matrix next = Matrix::Zero(t, t);
  for (Eigen::Index x = 0; x < t; ++x) {
    double sum = 0.0;
    for (Eigen::Index y = 0; y < t; ++y) {
      if (!support.adjacent(static_cast<TypeId>(x), static_cast<TypeId>(y))) continue;
      next(x, y) = std::clamp(p(static_cast<TypeId>(x), static_cast<TypeId>(y)) - cfg.lr * grad(x, y), 0.0, 1.0);
      sum += next(x, y);
    }
    if (sum > 0.0) {
      next.row(x) /= sum;
    } else {
      const double share = 1.0 / static_cast<double>(support.type_degree(static_cast<TypeId>(x)));
      for (Eigen::Index y = 0; y < t; ++y)
        if (support.adjacent(static_cast<TypeId>(x), static_cast<TypeId>(y))) next(x, y) = share;
    }
  }
  return StochasticMatrix(std::move(next), support);
}

}  // namespace bhin
