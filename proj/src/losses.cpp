// Copyright 2026 The CLOVER-HTS Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "clover/losses.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "clover/error.hpp"
#include "clover/kernels.hpp"

namespace clover {

namespace {

namespace kp = kernels::parallel;

void check_targets(const Tensor& targets, const FactorParams& params, const AggregationMatrix& s,
                   const char* what) {
  if (targets.shape() != Shape{s.rows(), params.horizon()}) {
    throw ShapeError(std::string(what) + ": targets " + shape_string(targets.shape()) +
                     " expected " + shape_string({s.rows(), params.horizon()}));
  }
}

// Flat (row * N_h + h) indices making up each energy-score vector.
std::vector<std::vector<std::size_t>> energy_groups(std::size_t rows, std::size_t nh,
                                                    EnergyNorm norm) {
  std::vector<std::vector<std::size_t>> groups;
  switch (norm) {
    case EnergyNorm::kJoint:
      groups.emplace_back(rows * nh);
      for (std::size_t i = 0; i < rows * nh; ++i) groups[0][i] = i;
      break;
    case EnergyNorm::kPerSeries:
      for (std::size_t r = 0; r < rows; ++r) {
        auto& g = groups.emplace_back();
        for (std::size_t h = 0; h < nh; ++h) g.push_back(r * nh + h);
      }
      break;
    case EnergyNorm::kPerHorizon:
      for (std::size_t h = 0; h < nh; ++h) {
        auto& g = groups.emplace_back();
        for (std::size_t r = 0; r < rows; ++r) g.push_back(r * nh + h);
      }
      break;
  }
  return groups;
}

// points[i, d] = samples[group[d], i]
void gather_points(std::span<const double> samples, std::size_t ns,
                   const std::vector<std::size_t>& group, std::vector<double>& points,
                   std::vector<double>& y, std::span<const double> targets) {
  const std::size_t dim = group.size();
  points.assign(ns * dim, 0.0);
  y.assign(dim, 0.0);
  for (std::size_t d = 0; d < dim; ++d) {
    y[d] = targets[group[d]];
    for (std::size_t i = 0; i < ns; ++i) points[i * dim + d] = samples[group[d] * ns + i];
  }
}

}  // namespace

std::string objective_name(Objective objective) {
  switch (objective) {
    case Objective::kCrps: return "crps";
    case Objective::kEnergy: return "energy";
    case Objective::kNll: return "nll";
  }
  return "unknown";
}

Objective parse_objective(const std::string& name) {
  if (name == "crps") return Objective::kCrps;
  if (name == "energy") return Objective::kEnergy;
  if (name == "nll") return Objective::kNll;
  throw ConfigError("objective: expected crps, energy or nll, got '" + name + "'");
}

std::string energy_norm_name(EnergyNorm norm) {
  switch (norm) {
    case EnergyNorm::kJoint: return "joint";
    case EnergyNorm::kPerSeries: return "per_series";
    case EnergyNorm::kPerHorizon: return "per_horizon";
  }
  return "unknown";
}

EnergyNorm parse_energy_norm(const std::string& name) {
  if (name == "joint") return EnergyNorm::kJoint;
  if (name == "per_series") return EnergyNorm::kPerSeries;
  if (name == "per_horizon") return EnergyNorm::kPerHorizon;
  throw ConfigError("energy_norm: expected joint, per_series or per_horizon, got '" + name + "'");
}

Var crps_sum(const Var& samples, const Tensor& targets) {
  const Shape& sh = samples.shape();
  if (sh.empty() || sh.back() < 2) throw ConfigError("crps loss: need at least 2 samples");
  const std::size_t ns = sh.back();
  const std::size_t rows = samples.size() / ns;
  if (targets.size() != rows) {
    throw ShapeError("crps loss: samples " + shape_string(sh) + " vs targets " +
                     shape_string(targets.shape()));
  }
  std::vector<double> per_row(rows);
  kp::crps_rows(rows, ns, samples.value().values(), targets.values(), per_row);
  double total = 0.0;
  for (double v : per_row) total += v;
  Tape& tape = samples.tape();
  const Var parents[] = {samples};
  return tape.record(Tensor::scalar(total), parents,
                     [&tape, samples, targets, rows, ns](std::span<const double> up) {
                       const std::vector<double> upstream(rows, up[0]);
                       kp::crps_rows_grad_accumulate(rows, ns, samples.value().values(),
                                                     targets.values(), upstream,
                                                     tape.grad_buffer(samples.id()));
                     });
}

Var energy_sum(const Var& samples, const Tensor& targets, double beta, EnergyNorm norm) {
  if (!(beta > 0.0 && beta < 2.0)) {
    throw ConfigError("energy loss: beta must lie in (0, 2), got " + std::to_string(beta));
  }
  const Shape& sh = samples.shape();
  if (sh.size() != 3 || targets.shape() != Shape{sh[0], sh[1]}) {
    throw ShapeError("energy loss: samples " + shape_string(sh) + " vs targets " +
                     shape_string(targets.shape()));
  }
  const std::size_t ns = sh[2];
  if (ns < 2) throw ConfigError("energy loss: need at least 2 samples");
  auto groups = energy_groups(sh[0], sh[1], norm);
  std::vector<double> points;
  std::vector<double> y;
  double total = 0.0;
  for (const auto& g : groups) {
    gather_points(samples.value().values(), ns, g, points, y, targets.values());
    total += kp::energy(ns, g.size(), points, y, beta);
  }
  Tape& tape = samples.tape();
  const Var parents[] = {samples};
  return tape.record(
      Tensor::scalar(total), parents,
      [&tape, samples, targets, beta, ns, groups = std::move(groups)](std::span<const double> up) {
        auto grad = tape.grad_buffer(samples.id());
        std::vector<double> pts;
        std::vector<double> yv;
        std::vector<double> dpts;
        for (const auto& g : groups) {
          const std::size_t dim = g.size();
          gather_points(samples.value().values(), ns, g, pts, yv, targets.values());
          dpts.assign(ns * dim, 0.0);
          kp::energy_grad_accumulate(ns, dim, pts, yv, beta, up[0], dpts);
          for (std::size_t d = 0; d < dim; ++d) {
            for (std::size_t i = 0; i < ns; ++i) grad[g[d] * ns + i] += dpts[i * dim + d];
          }
        }
      });
}

Var loss_crps(const Tensor& targets, const FactorParams& params, const AggregationMatrix& s,
              const NoiseDraws& noise) {
  check_targets(targets, params, s, "loss_crps");
  return crps_sum(sample(params, noise, s).coherent, targets);
}

Var loss_energy(const Tensor& targets, const FactorParams& params, const AggregationMatrix& s,
                const NoiseDraws& noise, const LossConfig& config) {
  check_targets(targets, params, s, "loss_energy");
  return energy_sum(sample(params, noise, s).coherent, targets, config.beta, config.energy_norm);
}

Var loss_nll(const Tensor& targets, const FactorParams& params, const AggregationMatrix& s) {
  params.validate();
  check_targets(targets, params, s, "loss_nll");
  using Eigen::MatrixXd;
  using Eigen::VectorXd;
  const std::size_t nb = params.n_bottom();
  const std::size_t nh = params.horizon();
  const std::size_t nk = params.n_factors();
  const std::size_t na = s.n_aggregate();
  const Tensor& mu = params.mu.value();
  const Tensor& sigma = params.sigma.value();
  const Tensor& f = params.loadings.value();

  // Per-horizon pieces reused by the backward pass.
  struct Cache {
    VectorXd alpha;       // Sigma^-1 r
    MatrixXd dinv_f_minv; // D^-1 F M^-1 = Sigma^-1 F, [N_b, N_k]
    VectorXd diag_inv;    // diag(Sigma^-1)
  };
  std::vector<Cache> cache(nh);
  double total = 0.0;
  const double log2pi = std::log(2.0 * std::numbers::pi);
  for (std::size_t h = 0; h < nh; ++h) {
    VectorXd r(nb);
    VectorXd dinv(nb);
    double logdet = 0.0;
    for (std::size_t b = 0; b < nb; ++b) {
      r[b] = targets.at(na + b, h) - mu.at(b, h);
      const double var = sigma.at(b, h) * sigma.at(b, h);
      dinv[b] = 1.0 / var;
      logdet += std::log(var);
    }
    Cache& c = cache[h];
    VectorXd dinv_r = dinv.cwiseProduct(r);
    if (nk == 0) {
      c.alpha = dinv_r;
      c.dinv_f_minv = MatrixXd(nb, 0);
      c.diag_inv = dinv;
    } else {
      MatrixXd fh(nb, nk);
      for (std::size_t b = 0; b < nb; ++b) {
        for (std::size_t k = 0; k < nk; ++k) fh(b, k) = f.at(b, k, h);
      }
      const MatrixXd dinv_f = dinv.asDiagonal() * fh;
      const MatrixXd m = MatrixXd::Identity(nk, nk) + fh.transpose() * dinv_f;
      Eigen::LLT<MatrixXd> llt(m);
      if (llt.info() != Eigen::Success) {
        throw NumericalError("loss_nll: capacitance matrix not positive definite at horizon " +
                             std::to_string(h + 1));
      }
      const MatrixXd lower = llt.matrixL();
      const double logdet_m = 2.0 * lower.diagonal().array().log().sum();
      if (!std::isfinite(logdet_m)) {
        throw NumericalError("loss_nll: non-finite log determinant at horizon " +
                             std::to_string(h + 1));
      }
      logdet += logdet_m;
      c.dinv_f_minv = llt.solve(dinv_f.transpose()).transpose();
      c.alpha = dinv_r - c.dinv_f_minv * (fh.transpose() * dinv_r);
      c.diag_inv = dinv - c.dinv_f_minv.cwiseProduct(dinv_f).rowwise().sum();
    }
    const double quad = r.dot(c.alpha);
    total += 0.5 * (static_cast<double>(nb) * log2pi + logdet + quad);
  }
  if (!std::isfinite(total)) throw NumericalError("loss_nll: non-finite value");

  Tape& tape = params.mu.tape();
  const Var parents[] = {params.mu, params.sigma, params.loadings};
  return tape.record(
      Tensor::scalar(total), parents,
      [&tape, p = params, cache = std::move(cache), nb, nh, nk](std::span<const double> up) {
        const double u = up[0];
        const Tensor& sig = p.sigma.value();
        const Tensor& fl = p.loadings.value();
        if (p.mu.requires_grad()) {
          auto g = tape.grad_buffer(p.mu.id());
          for (std::size_t b = 0; b < nb; ++b) {
            for (std::size_t h = 0; h < nh; ++h) g[b * nh + h] -= u * cache[h].alpha[b];
          }
        }
        if (p.sigma.requires_grad()) {
          // dNLL/dsigma_b = 2 sigma_b G_bb with G = (Sigma^-1 - alpha alpha^T) / 2
          auto g = tape.grad_buffer(p.sigma.id());
          for (std::size_t b = 0; b < nb; ++b) {
            for (std::size_t h = 0; h < nh; ++h) {
              const double a = cache[h].alpha[b];
              g[b * nh + h] += u * sig.at(b, h) * (cache[h].diag_inv[b] - a * a);
            }
          }
        }
        if (nk > 0 && p.loadings.requires_grad()) {
          // dNLL/dF = 2 G F = Sigma^-1 F - alpha (alpha^T F)
          auto g = tape.grad_buffer(p.loadings.id());
          for (std::size_t h = 0; h < nh; ++h) {
            const Cache& c = cache[h];
            for (std::size_t k = 0; k < nk; ++k) {
              double af = 0.0;
              for (std::size_t b = 0; b < nb; ++b) af += c.alpha[b] * fl.at(b, k, h);
              for (std::size_t b = 0; b < nb; ++b) {
                g[(b * nk + k) * nh + h] += u * (c.dinv_f_minv(b, k) - c.alpha[b] * af);
              }
            }
          }
        }
      });
}

Var compute_loss(Objective objective, const Tensor& targets, const FactorParams& params,
                 const AggregationMatrix& s, const NoiseDraws& noise, const LossConfig& config) {
  switch (objective) {
    case Objective::kCrps: return loss_crps(targets, params, s, noise);
    case Objective::kEnergy: return loss_energy(targets, params, s, noise, config);
    case Objective::kNll: return loss_nll(targets, params, s);
  }
  throw ConfigError("unknown objective");
}

}  // namespace clover
