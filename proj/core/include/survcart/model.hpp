#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "survcart/dataset.hpp"

namespace survcart {

/// Parametric families for event or censoring times.
///
/// Parameter vectors are ordered as
///   Exponential: (lambda)            f(t) = lambda exp(-lambda t)
///   Weibull:     (alpha, lambda)     f(t) = alpha lambda t^(alpha-1) exp(-lambda t^alpha)
///   LogNormal:   (mu, sigma)         log T ~ N(mu, sigma^2)
///   Normal:      (mu, sigma)         T ~ N(mu, sigma^2)
enum class Family { Exponential, Weibull, LogNormal, Normal };

/// Which time distribution a model describes. The censoring component uses
/// 1 - delta as its contribution indicator.
enum class Component { Event, Censor };

std::size_t parameter_count(Family family) noexcept;
const char* to_string(Family family) noexcept;
const char* to_string(Component component) noexcept;
std::optional<Family> parse_family(std::string_view name);

struct FittedModel {
  Family family = Family::Exponential;
  Component component = Component::Event;
  Eigen::VectorXd params;
  double loglik = 0.0;
  /// Per-subject information J(theta_hat): minus the Hessian of the
  /// log-likelihood divided by the number of subjects.
  Eigen::MatrixXd info;
  std::size_t n_used = 0;
  /// Observations whose indicator is 1 for this component (D or N - D).
  std::size_t contributing = 0;
  int iterations = 0;
};

enum class FitStatus { Fitted, Degenerate, Failed };

const char* to_string(FitStatus status) noexcept;

/// Outcome of fitting one component at a node. Degenerate components (no
/// contributing observations) carry no model; their supremum log-likelihood
/// is 0, attained in the limit rate -> 0.
struct ComponentFit {
  Family family = Family::Exponential;
  Component component = Component::Event;
  FitStatus status = FitStatus::Failed;
  std::optional<FittedModel> model;
  std::string message;

  bool fitted() const noexcept { return status == FitStatus::Fitted; }
  double loglik() const noexcept;
  std::size_t parameters() const noexcept { return parameter_count(family); }
};

/// Maximum-likelihood fit of one component. Throws Error with
/// InvalidTime, DegenerateComponent or NonConvergence.
FittedModel fit(Family family, Component component, std::span<const double> time,
                std::span<const std::uint8_t> event);
FittedModel fit(Family family, Component component, const SurvivalDataset& data);

/// Non-throwing variant used by the tree builder.
ComponentFit try_fit(Family family, Component component, std::span<const double> time,
                     std::span<const std::uint8_t> event);
ComponentFit try_fit(Family family, Component component, const SurvivalDataset& data);

/// Censored log-likelihood of the component at `params`.
double log_likelihood(Family family, Component component, const Eigen::VectorXd& params,
                      std::span<const double> time, std::span<const std::uint8_t> event);

/// Row i holds u_i(theta) for the component.
Eigen::MatrixXd score_contributions(Family family, Component component,
                                    const Eigen::VectorXd& params, std::span<const double> time,
                                    std::span<const std::uint8_t> event);
Eigen::MatrixXd score_contributions(const FittedModel& model, std::span<const double> time,
                                    std::span<const std::uint8_t> event);
Eigen::MatrixXd score_contributions(const FittedModel& model, const SurvivalDataset& data);

/// Minus the Hessian of the log-likelihood divided by N, evaluated at `params`.
Eigen::MatrixXd information(Family family, Component component, const Eigen::VectorXd& params,
                            std::span<const double> time, std::span<const std::uint8_t> event);

/// Symmetric inverse square root via eigendecomposition; eigenvalues below
/// 1e-12 are clipped to 1e-12.
Eigen::MatrixXd inverse_sqrt(const Eigen::MatrixXd& m);

struct LikelihoodSummary {
  double loglik = 0.0;
  double aic = 0.0;
  std::size_t parameters = 0;
};

/// Total log-likelihood and AIC over leaves fitted on disjoint subsets.
LikelihoodSummary loglik_and_aic(std::span<const std::pair<ComponentFit, ComponentFit>> leaves);

/// Standard normal helpers shared with the stability module.
double normal_pdf(double y) noexcept;
/// log Phi(-y), accurate in the far upper tail.
double log_normal_sf(double y) noexcept;
/// phi(y) / Phi(-y).
double normal_hazard(double y) noexcept;

}  // namespace survcart
