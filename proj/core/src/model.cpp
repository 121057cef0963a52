#include "survcart/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "survcart/error.hpp"

namespace survcart {

std::size_t parameter_count(Family family) noexcept {
  return family == Family::Exponential ? 1 : 2;
}

const char* to_string(Family family) noexcept {
  switch (family) {
    case Family::Exponential: return "exponential";
    case Family::Weibull: return "weibull";
    case Family::LogNormal: return "lognormal";
    case Family::Normal: return "normal";
  }
  return "unknown";
}

const char* to_string(Component component) noexcept {
  return component == Component::Event ? "event" : "censor";
}

const char* to_string(FitStatus status) noexcept {
  switch (status) {
    case FitStatus::Fitted: return "fitted";
    case FitStatus::Degenerate: return "degenerate";
    case FitStatus::Failed: return "failed";
  }
  return "unknown";
}

std::optional<Family> parse_family(std::string_view name) {
  std::string s(name);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "exponential" || s == "exp") return Family::Exponential;
  if (s == "weibull" || s == "wei") return Family::Weibull;
  if (s == "lognormal" || s == "log-normal" || s == "ln") return Family::LogNormal;
  if (s == "normal" || s == "gaussian") return Family::Normal;
  return std::nullopt;
}

double ComponentFit::loglik() const noexcept {
  switch (status) {
    case FitStatus::Fitted: return model->loglik;
    case FitStatus::Degenerate: return 0.0;
    case FitStatus::Failed: return std::numeric_limits<double>::quiet_NaN();
  }
  return std::numeric_limits<double>::quiet_NaN();
}

double normal_pdf(double y) noexcept {
  return std::exp(-0.5 * y * y) / std::sqrt(2.0 * std::numbers::pi);
}

namespace {

// Mills ratio Phi(-y)/phi(y) by its continued fraction; used for y >= 5.
double mills_ratio_cf(double y) noexcept {
  double acc = y;
  for (int k = 80; k >= 1; --k) acc = y + k / acc;
  return 1.0 / acc;
}

}  // namespace

double log_normal_sf(double y) noexcept {
  if (y < 5.0) return std::log(0.5 * std::erfc(y / std::numbers::sqrt2));
  return -0.5 * y * y - 0.5 * std::log(2.0 * std::numbers::pi) + std::log(mills_ratio_cf(y));
}

double normal_hazard(double y) noexcept {
  if (y < 5.0) return normal_pdf(y) / (0.5 * std::erfc(y / std::numbers::sqrt2));
  return 1.0 / mills_ratio_cf(y);
}

namespace {

void check_lengths(std::span<const double> time, std::span<const std::uint8_t> event) {
  if (time.size() != event.size()) {
    throw Error(ErrorCode::SchemaMismatch, "time and event vectors differ in length");
  }
}

void check_times(Family family, std::span<const double> time) {
  for (std::size_t i = 0; i < time.size(); ++i) {
    const double t = time[i];
    if (!std::isfinite(t) || (family != Family::Normal && t <= 0.0)) {
      throw Error(ErrorCode::InvalidTime, "time at position " + std::to_string(i + 1) +
                                              " is not valid for the " + to_string(family) +
                                              " family");
    }
  }
}

void check_params(Family family, const Eigen::VectorXd& params) {
  if (static_cast<std::size_t>(params.size()) != parameter_count(family)) {
    throw Error(ErrorCode::SchemaMismatch, std::string("parameter vector length does not match ") +
                                               to_string(family));
  }
}

// Contribution indicator: delta for events, 1 - delta for censoring.
inline double indicator(Component c, std::uint8_t delta) noexcept {
  const bool d = delta != 0;
  return (c == Component::Event ? d : !d) ? 1.0 : 0.0;
}

std::size_t count_contributing(Component c, std::span<const std::uint8_t> event) {
  std::size_t n = 0;
  for (auto d : event) n += static_cast<std::size_t>(indicator(c, d));
  return n;
}

double location_scale_z(Family family, double t) noexcept {
  return family == Family::LogNormal ? std::log(t) : t;
}

// Gradient and Hessian of the location-scale log-likelihood in (mu, sigma).
struct LocScaleDerivs {
  double loglik = 0.0;
  Eigen::Vector2d grad = Eigen::Vector2d::Zero();
  Eigen::Matrix2d hess = Eigen::Matrix2d::Zero();
};

LocScaleDerivs locscale_derivs(Family family, Component component, double mu, double sigma,
                               std::span<const double> time, std::span<const std::uint8_t> event) {
  LocScaleDerivs out;
  const double s2 = sigma * sigma;
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  for (std::size_t i = 0; i < time.size(); ++i) {
    const double z = location_scale_z(family, time[i]);
    const double y = (z - mu) / sigma;
    if (indicator(component, event[i]) != 0.0) {
      out.loglik += -std::log(sigma) - half_log_2pi - 0.5 * y * y;
      if (family == Family::LogNormal) out.loglik -= z;
      out.grad(0) += y / sigma;
      out.grad(1) += (y * y - 1.0) / sigma;
      out.hess(0, 0) += -1.0 / s2;
      out.hess(0, 1) += -2.0 * y / s2;
      out.hess(1, 1) += (1.0 - 3.0 * y * y) / s2;
    } else {
      const double h = normal_hazard(y);
      const double dh = h * (h - y);
      out.loglik += log_normal_sf(y);
      out.grad(0) += h / sigma;
      out.grad(1) += y * h / sigma;
      out.hess(0, 0) += -dh / s2;
      out.hess(0, 1) += -(y * dh + h) / s2;
      out.hess(1, 1) += -(2.0 * y * h + y * y * dh) / s2;
    }
  }
  out.hess(1, 0) = out.hess(0, 1);
  return out;
}

struct WeibullSums {
  double log_a0 = 0.0;  // log sum t^alpha
  double r1 = 0.0;      // sum t^alpha log t / sum t^alpha
  double r2 = 0.0;      // sum t^alpha (log t)^2 / sum t^alpha
};

WeibullSums weibull_sums(double alpha, std::span<const double> log_t, double log_t_max) {
  double a0 = 0.0, a1 = 0.0, a2 = 0.0;
  for (double lt : log_t) {
    const double w = std::exp(alpha * (lt - log_t_max));
    a0 += w;
    a1 += w * lt;
    a2 += w * lt * lt;
  }
  return {std::log(a0) + alpha * log_t_max, a1 / a0, a2 / a0};
}

FittedModel fit_exponential(std::span<const double> time, std::size_t d) {
  double total = 0.0;
  for (double t : time) total += t;
  const double n = static_cast<double>(time.size());
  const double rate = static_cast<double>(d) / total;
  FittedModel m;
  m.params = Eigen::VectorXd::Constant(1, rate);
  m.loglik = static_cast<double>(d) * std::log(rate) - rate * total;
  m.info = Eigen::MatrixXd::Constant(1, 1, (static_cast<double>(d) / n) / (rate * rate));
  return m;
}

FittedModel fit_weibull(Component component, std::span<const double> time,
                        std::span<const std::uint8_t> event, std::size_t d) {
  std::vector<double> log_t(time.size());
  double sum_log_t_contrib = 0.0;
  for (std::size_t i = 0; i < time.size(); ++i) {
    log_t[i] = std::log(time[i]);
    sum_log_t_contrib += indicator(component, event[i]) * log_t[i];
  }
  const double log_t_max = *std::max_element(log_t.begin(), log_t.end());
  const double dd = static_cast<double>(d);

  // Newton on the profile score in alpha with lambda(alpha) = D / sum t^alpha.
  double alpha = 1.0;
  int iter = 0;
  bool converged = false;
  for (; iter < 100; ++iter) {
    const auto s = weibull_sums(alpha, log_t, log_t_max);
    const double g = dd / alpha + sum_log_t_contrib - dd * s.r1;
    const double gp = -dd / (alpha * alpha) - dd * (s.r2 - s.r1 * s.r1);
    double next = alpha - g / gp;
    if (!(next > 0.0) || !std::isfinite(next)) next = 0.5 * alpha;
    const double step = next - alpha;
    alpha = next;
    if (std::fabs(step) < 1e-8) {
      converged = true;
      ++iter;
      break;
    }
  }
  if (!converged || !std::isfinite(alpha) || alpha > 1e6) {
    throw Error(ErrorCode::NonConvergence, "Weibull shape iteration did not converge");
  }

  const auto s = weibull_sums(alpha, log_t, log_t_max);
  const double lambda = std::exp(std::log(dd) - s.log_a0);
  FittedModel m;
  m.params = Eigen::Vector2d(alpha, lambda);
  m.iterations = iter;
  m.loglik = log_likelihood(Family::Weibull, component, m.params, time, event);
  m.info = information(Family::Weibull, component, m.params, time, event);
  return m;
}

FittedModel fit_location_scale(Family family, Component component, std::span<const double> time,
                               std::span<const std::uint8_t> event, std::size_t d) {
  // Start from the closed form that holds without censoring.
  double mean = 0.0, mean_all = 0.0;
  for (std::size_t i = 0; i < time.size(); ++i) {
    const double z = location_scale_z(family, time[i]);
    mean_all += z;
    if (indicator(component, event[i]) != 0.0) mean += z;
  }
  mean /= static_cast<double>(d);
  mean_all /= static_cast<double>(time.size());
  double var = 0.0, var_all = 0.0;
  for (std::size_t i = 0; i < time.size(); ++i) {
    const double z = location_scale_z(family, time[i]);
    var_all += (z - mean_all) * (z - mean_all);
    if (indicator(component, event[i]) != 0.0) var += (z - mean) * (z - mean);
  }
  var /= static_cast<double>(d);
  var_all /= static_cast<double>(time.size());
  double mu = mean;
  double sigma = std::sqrt(var);
  if (!(sigma > 0.0)) sigma = var_all > 0.0 ? std::sqrt(var_all) : 1.0;

  const double n = static_cast<double>(time.size());
  const double tol = 1e-8 * std::max(1.0, n);
  auto cur = locscale_derivs(family, component, mu, sigma, time, event);
  int iter = 0;
  bool converged = cur.grad.norm() < tol;
  while (!converged && iter < 200) {
    ++iter;
    Eigen::Vector2d dir;
    Eigen::LLT<Eigen::Matrix2d> llt(-cur.hess);
    if (llt.info() == Eigen::Success) {
      dir = llt.solve(cur.grad);
    } else {
      dir = cur.grad * (sigma * sigma / n);
    }
    double step = 1.0;
    bool improved = false;
    for (int k = 0; k < 60; ++k, step *= 0.5) {
      const double mu_new = mu + step * dir(0);
      const double sigma_new = sigma + step * dir(1);
      if (!(sigma_new > 0.0)) continue;
      auto trial = locscale_derivs(family, component, mu_new, sigma_new, time, event);
      if (std::isfinite(trial.loglik) && trial.loglik >= cur.loglik - 1e-12 * std::fabs(cur.loglik)) {
        mu = mu_new;
        sigma = sigma_new;
        cur = trial;
        improved = true;
        break;
      }
    }
    if (!improved) break;
    converged = cur.grad.norm() < tol;
  }
  if (!converged || !(sigma > 1e-300) || !std::isfinite(mu)) {
    throw Error(ErrorCode::NonConvergence,
                std::string(to_string(family)) + " Newton iteration did not converge");
  }
  FittedModel m;
  m.params = Eigen::Vector2d(mu, sigma);
  m.iterations = iter;
  m.loglik = cur.loglik;
  m.info = -cur.hess / n;
  return m;
}

}  // namespace

double log_likelihood(Family family, Component component, const Eigen::VectorXd& params,
                      std::span<const double> time, std::span<const std::uint8_t> event) {
  check_lengths(time, event);
  check_params(family, params);
  double ll = 0.0;
  switch (family) {
    case Family::Exponential: {
      const double rate = params(0);
      for (std::size_t i = 0; i < time.size(); ++i) {
        ll += indicator(component, event[i]) * std::log(rate) - rate * time[i];
      }
      return ll;
    }
    case Family::Weibull: {
      const double alpha = params(0), lambda = params(1);
      for (std::size_t i = 0; i < time.size(); ++i) {
        const double lt = std::log(time[i]);
        const double c = indicator(component, event[i]);
        if (c != 0.0) ll += std::log(alpha) + std::log(lambda) + (alpha - 1.0) * lt;
        ll -= lambda * std::exp(alpha * lt);
      }
      return ll;
    }
    case Family::LogNormal:
    case Family::Normal:
      return locscale_derivs(family, component, params(0), params(1), time, event).loglik;
  }
  return ll;
}

Eigen::MatrixXd score_contributions(Family family, Component component,
                                    const Eigen::VectorXd& params, std::span<const double> time,
                                    std::span<const std::uint8_t> event) {
  check_lengths(time, event);
  check_params(family, params);
  const auto n = static_cast<Eigen::Index>(time.size());
  Eigen::MatrixXd u(n, static_cast<Eigen::Index>(parameter_count(family)));
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = time[static_cast<std::size_t>(i)];
    const double c = indicator(component, event[static_cast<std::size_t>(i)]);
    switch (family) {
      case Family::Exponential:
        u(i, 0) = c / params(0) - t;
        break;
      case Family::Weibull: {
        const double alpha = params(0), lambda = params(1);
        const double lt = std::log(t);
        const double ta = std::exp(alpha * lt);
        u(i, 0) = c / alpha + c * lt - lambda * ta * lt;
        u(i, 1) = c / lambda - ta;
        break;
      }
      case Family::LogNormal:
      case Family::Normal: {
        const double mu = params(0), sigma = params(1);
        const double y = (location_scale_z(family, t) - mu) / sigma;
        if (c != 0.0) {
          u(i, 0) = y / sigma;
          u(i, 1) = (y * y - 1.0) / sigma;
        } else {
          const double h = normal_hazard(y);
          u(i, 0) = h / sigma;
          u(i, 1) = y * h / sigma;
        }
        break;
      }
    }
  }
  return u;
}

Eigen::MatrixXd score_contributions(const FittedModel& model, std::span<const double> time,
                                    std::span<const std::uint8_t> event) {
  return score_contributions(model.family, model.component, model.params, time, event);
}

Eigen::MatrixXd score_contributions(const FittedModel& model, const SurvivalDataset& data) {
  return score_contributions(model, data.time(), data.event());
}

Eigen::MatrixXd information(Family family, Component component, const Eigen::VectorXd& params,
                            std::span<const double> time, std::span<const std::uint8_t> event) {
  check_lengths(time, event);
  check_params(family, params);
  const double n = static_cast<double>(time.size());
  const double d = static_cast<double>(count_contributing(component, event));
  switch (family) {
    case Family::Exponential:
      return Eigen::MatrixXd::Constant(1, 1, (d / n) / (params(0) * params(0)));
    case Family::Weibull: {
      const double alpha = params(0), lambda = params(1);
      double s1 = 0.0, s2 = 0.0;
      for (double t : time) {
        const double lt = std::log(t);
        const double ta = std::exp(alpha * lt);
        s1 += ta * lt;
        s2 += ta * lt * lt;
      }
      Eigen::MatrixXd j(2, 2);
      j(0, 0) = (d / n) / (alpha * alpha) + lambda * s2 / n;
      j(0, 1) = j(1, 0) = s1 / n;
      j(1, 1) = (d / n) / (lambda * lambda);
      return j;
    }
    case Family::LogNormal:
    case Family::Normal:
      return -locscale_derivs(family, component, params(0), params(1), time, event).hess / n;
  }
  return {};
}

FittedModel fit(Family family, Component component, std::span<const double> time,
                std::span<const std::uint8_t> event) {
  check_lengths(time, event);
  if (time.empty()) throw Error(ErrorCode::EmptyInput, "cannot fit an empty dataset");
  check_times(family, time);
  const std::size_t d = count_contributing(component, event);
  if (d == 0) {
    throw Error(ErrorCode::DegenerateComponent,
                std::string("no contributing observations for the ") + to_string(component) +
                    " component");
  }
  FittedModel m;
  switch (family) {
    case Family::Exponential: m = fit_exponential(time, d); break;
    case Family::Weibull: m = fit_weibull(component, time, event, d); break;
    case Family::LogNormal:
    case Family::Normal: m = fit_location_scale(family, component, time, event, d); break;
  }
  m.family = family;
  m.component = component;
  m.n_used = time.size();
  m.contributing = d;
  return m;
}

FittedModel fit(Family family, Component component, const SurvivalDataset& data) {
  return fit(family, component, data.time(), data.event());
}

ComponentFit try_fit(Family family, Component component, std::span<const double> time,
                     std::span<const std::uint8_t> event) {
  ComponentFit out;
  out.family = family;
  out.component = component;
  try {
    out.model = fit(family, component, time, event);
    out.status = FitStatus::Fitted;
  } catch (const Error& e) {
    out.status = e.code() == ErrorCode::DegenerateComponent ? FitStatus::Degenerate
                                                            : FitStatus::Failed;
    out.message = e.what();
  }
  return out;
}

ComponentFit try_fit(Family family, Component component, const SurvivalDataset& data) {
  return try_fit(family, component, data.time(), data.event());
}

Eigen::MatrixXd inverse_sqrt(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(1e-12);
  return es.eigenvectors() * ev.cwiseSqrt().cwiseInverse().asDiagonal() *
         es.eigenvectors().transpose();
}

LikelihoodSummary loglik_and_aic(std::span<const std::pair<ComponentFit, ComponentFit>> leaves) {
  LikelihoodSummary s;
  for (const auto& [event_fit, censor_fit] : leaves) {
    s.loglik += event_fit.loglik() + censor_fit.loglik();
    s.parameters += event_fit.parameters() + censor_fit.parameters();
  }
  s.aic = -2.0 * s.loglik + 2.0 * static_cast<double>(s.parameters);
  return s;
}

}  // namespace survcart
