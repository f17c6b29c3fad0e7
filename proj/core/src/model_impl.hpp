#pragma once

// Factories for the model classes that have no public header of their own.

#include <memory>

#include "mapl/models.hpp"

namespace mapl::detail {

std::unique_ptr<ChoiceModel> make_mnl(const ModelSpec& spec, std::size_t k);
std::unique_ptr<ChoiceModel> make_mxl(const ModelSpec& spec, std::size_t k);
std::unique_ptr<ChoiceModel> make_nn(const ModelSpec& spec, std::size_t k);

/// Accumulates one individual's panel term given per-draw log-likelihoods.
/// Returns -log(mean_r exp(loglik_r)) and fills weights_r = d(-log mean)/d(loglik_r)
/// negated, i.e. the posterior weight of each draw. Floors the mean at
/// kProbabilityFloor; a clamped term reports clamped = true and zero weights.
struct PanelTerm {
  double nll;
  bool clamped;
};
PanelTerm panel_term(const Eigen::Ref<const Eigen::RowVectorXd>& loglik, Eigen::RowVectorXd& weights);

/// Panel term for individual i from utilities V (R x TJ, columns ordered task
/// then alternative). V is consumed: when want_grad is set it holds dNLL/dV
/// on return, otherwise the choice probabilities.
PanelTerm panel_nll_and_grad(Eigen::MatrixXd& v, const ChoiceDataset& ds, std::size_t i, bool want_grad);

}  // namespace mapl::detail
