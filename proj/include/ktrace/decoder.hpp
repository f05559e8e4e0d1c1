#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <span>

#include "ktrace/counters.hpp"
#include "ktrace/model.hpp"

namespace ktrace {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Affine reduction h' = A h + b used when the decoder's embedding size
// differs from the encoder's.
Eigen::VectorXd project(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                        Eigen::Ref<const Eigen::VectorXd> h);

// Scalar-form projection from the store's own A, b. Returns 0 for the
// "none" encoder (no projection parameters exist).
double project_scalar(const ParameterStore& params,
                      Eigen::Ref<const Eigen::VectorXd> h);

// p = sigmoid(<h, v_target> + w_target). Targets are items for "i" and
// single skills for "s". Out-of-vocabulary targets contribute zero terms.
double decode_dot(const ParameterStore& params,
                  Eigen::Ref<const Eigen::VectorXd> h, int target);

// Resolves the dot-form target for an item; throws ConfigError for a
// multi-skill item under the "s" decoder.
int dot_target(const ModelSpec& spec, int item, const QMatrix& qm);

// Scalar decoder: p = sigmoid(h' + w_item + sum_k beta_k + gamma_k W_k +
// delta_k F_k), restricted to the blocks the spec selects. kc_counts holds
// the (skill, wins, fails) triples for the skills of the current item.
// Out-of-vocabulary items/skills contribute zero terms.
double decode_scalar(const ParameterStore& params, double h_prime, int item,
                     std::span<const SkillWinsFails> kc_counts);

// Per-skill readout of the "s" dot decoder: entry k equals
// decode_dot(params, h, k) exactly.
Eigen::VectorXd full_output_vector(const ParameterStore& params,
                                   Eigen::Ref<const Eigen::VectorXd> h);

}  // namespace ktrace
