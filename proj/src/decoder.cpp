#include "ktrace/decoder.hpp"

#include "ktrace/errors.hpp"

namespace ktrace {

Eigen::VectorXd project(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                        Eigen::Ref<const Eigen::VectorXd> h) {
  if (A.cols() != h.size() || A.rows() != b.size())
    throw ConfigError("projection shape mismatch");
  return A * h + b;
}

double project_scalar(const ParameterStore& params,
                      Eigen::Ref<const Eigen::VectorXd> h) {
  if (!params.spec().has_projection()) return 0.0;
  return params.proj_weight().dot(h) + params.proj_offset();
}

double decode_dot(const ParameterStore& params,
                  Eigen::Ref<const Eigen::VectorXd> h, int target) {
  const auto& spec = params.spec();
  if (!spec.dot_form()) throw ConfigError("decoder is not in dot-product form");
  if (h.size() != spec.output_dim)
    throw ConfigError("state dimension does not match decoder embedding size");
  double logit = 0.0;
  if (target >= 0 && target < params.layout().dot_targets)
    logit = h.dot(params.dot_embeddings().col(target)) + params.dot_biases()[target];
  return sigmoid(logit);
}

int dot_target(const ModelSpec& spec, int item, const QMatrix& qm) {
  if (spec.metadata.item) return item;
  auto skills = qm.skills_of(item);
  if (skills.size() != 1)
    throw ConfigError(
        "item " + std::to_string(item) + " assesses " +
        std::to_string(skills.size()) +
        " skills; the 's' dot-product decoder needs single-skill items -- use "
        "combined-skill tokens or the iswf decoder");
  return skills[0];
}

double decode_scalar(const ParameterStore& params, double h_prime, int item,
                     std::span<const SkillWinsFails> kc_counts) {
  const auto& spec = params.spec();
  if (!spec.scalar_form()) throw ConfigError("decoder is not in scalar form");
  double logit = h_prime;
  if (spec.metadata.item && item >= 0 && item < params.num_items())
    logit += params.item_bias()[item];
  for (const auto& c : kc_counts) {
    if (c.skill < 0 || c.skill >= params.num_skills()) continue;
    if (spec.metadata.skill) logit += params.skill_bias()[c.skill];
    if (spec.metadata.wins) logit += params.win_slope()[c.skill] * c.wins;
    if (spec.metadata.fails) logit += params.fail_slope()[c.skill] * c.fails;
  }
  return sigmoid(logit);
}

Eigen::VectorXd full_output_vector(const ParameterStore& params,
                                   Eigen::Ref<const Eigen::VectorXd> h) {
  const auto& spec = params.spec();
  if (!spec.dot_form() || spec.metadata.item)
    throw ConfigError("full output vector requires the 's' dot-product decoder");
  Eigen::VectorXd out(params.num_skills());
  // Entry k goes through decode_dot itself so the equivalence is exact.
  for (int k = 0; k < params.num_skills(); ++k) out[k] = decode_dot(params, h, k);
  return out;
}

}  // namespace ktrace
