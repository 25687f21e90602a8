#include <cmath>

#include "mfa/errors.hpp"
#include "mfa/training.hpp"

namespace mfa {

namespace {

struct BlockRef {
  std::string_view name;
  Mat* mat;
};

std::vector<BlockRef> blocks_of(ModelParams& p) {
  std::vector<BlockRef> out;
  p.for_each_block([&](std::string_view name, Mat& m, BlockKind) { out.push_back({name, &m}); });
  return out;
}

void require_finite(const Gradients& g) {
  g.for_each_block([](std::string_view name, const Mat& m, BlockKind) {
    if (!m.all_finite()) throw NumericError("non-finite gradient in block '" + std::string(name) + "'");
  });
}

}  // namespace

double clip_global_norm(Gradients& grads, double max_norm) {
  require_finite(grads);
  const double norm = std::sqrt(grads.squared_norm());
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    grads.for_each_block([scale](std::string_view, Mat& m, BlockKind) {
      for (double& x : m.flat()) x *= scale;
    });
  }
  return norm;
}

OptState OptState::for_params(const ModelParams& params, double learning_rate, double decay,
                              double epsilon) {
  if (!(learning_rate > 0.0)) throw ConfigError("rmsprop: learning rate must be positive");
  if (!(decay >= 0.0 && decay < 1.0)) throw ConfigError("rmsprop: decay must lie in [0, 1)");
  if (!(epsilon > 0.0)) throw ConfigError("rmsprop: epsilon must be positive");
  OptState s;
  s.mean_square = ModelParams::zeros(params.dims);
  s.decay = decay;
  s.epsilon = epsilon;
  s.learning_rate = learning_rate;
  return s;
}

void rmsprop_step(ModelParams& params, const Gradients& grads, OptState& opt) {
  if (!(params.dims == grads.dims) || !(params.dims == opt.mean_square.dims)) {
    throw ShapeError("rmsprop_step: params, gradients and optimizer state have different dims");
  }
  require_finite(grads);
  auto p = blocks_of(params);
  auto a = blocks_of(opt.mean_square);
  std::vector<const Mat*> g;
  grads.for_each_block([&](std::string_view, const Mat& m, BlockKind) { g.push_back(&m); });

  const double rho = opt.decay;
  for (std::size_t b = 0; b < p.size(); ++b) {
    auto theta = p[b].mat->flat();
    auto acc = a[b].mat->flat();
    const auto grad = g[b]->flat();
    for (std::size_t k = 0; k < theta.size(); ++k) {
      acc[k] = rho * acc[k] + (1.0 - rho) * grad[k] * grad[k];
      theta[k] -= opt.learning_rate * grad[k] / std::sqrt(acc[k] + opt.epsilon);
    }
    if (!p[b].mat->all_finite()) {
      throw NumericError("rmsprop_step: parameter block '" + std::string(p[b].name) + "' became non-finite");
    }
  }
}

}  // namespace mfa
