#include "ttvp/stochvol.hpp"

#include "ttvp/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace ttvp {

const double LogChiSquareMixture::prob[10] = {0.00609, 0.04775, 0.13057, 0.20674, 0.22715,
                                              0.18842, 0.12047, 0.05591, 0.01575, 0.00115};
const double LogChiSquareMixture::mean[10] = {1.92677,  1.34744,  0.73504,  0.02266,  -0.85173,
                                              -1.97278, -3.46788, -5.55246, -8.68384, -14.65};
const double LogChiSquareMixture::var[10] = {0.11265, 0.17788, 0.26768, 0.40611, 0.62699,
                                             0.98583, 1.57469, 2.54498, 4.16591, 7.33342};

void VolatilityBlock::validate() const {
  if (mode == VolMode::Homoscedastic) {
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) throw InvalidArgument("stochvol: sigma2 must be positive");
    if (!(c0 > 0.0) || !(c1 > 0.0)) throw InvalidArgument("stochvol: c0, c1 must be positive");
    return;
  }
  if (!(std::abs(rho) < 1.0)) throw InvalidArgument("stochvol: |rho| must be below 1");
  if (!(zeta > 0.0) || !std::isfinite(zeta)) throw InvalidArgument("stochvol: zeta must be positive");
  if (!(mu_var > 0.0) || !(a_rho > 0.0) || !(b_rho > 0.0) || !(B_zeta > 0.0)) {
    throw InvalidArgument("stochvol: prior constants must be positive");
  }
  if (!h.allFinite() || !std::isfinite(h0) || !std::isfinite(mu)) throw InvalidArgument("stochvol: non-finite state");
}

Eigen::VectorXd VolatilityBlock::variances(Eigen::Index T) const {
  if (mode == VolMode::Homoscedastic) return Eigen::VectorXd::Constant(T, sigma2);
  if (h.size() != T) throw InvalidArgument("stochvol: path length differs from sample length");
  Eigen::VectorXd v = h.array().exp();
  if (!v.allFinite()) throw NumericalError("stochvol: exp(h) overflows");
  return v;
}

void initialize_volatility(VolatilityBlock& block, const Eigen::VectorXd& residuals) {
  const Eigen::Index T = residuals.size();
  const double var = T > 0 ? std::max(residuals.squaredNorm() / static_cast<double>(T), 1e-12) : 1.0;
  block.sigma2 = var;
  block.mu = std::log(var);
  block.h = Eigen::VectorXd::Constant(T, block.mu);
  block.h0 = block.mu;
  block.rho = 2.0 * block.a_rho / (block.a_rho + block.b_rho) - 1.0;
  block.zeta = std::min(block.B_zeta, 0.1);
}

double log_mu_rho_prior(const VolatilityBlock& block, double mu, double rho) {
  const double d = mu - block.mu_mean;
  return -0.5 * d * d / block.mu_var + (block.a_rho - 1.0) * std::log1p(rho) + (block.b_rho - 1.0) * std::log1p(-rho);
}

namespace {

// Symmetric tridiagonal precision with diagonal `diag` and off-diagonal
// `off`; returns mean + L^-T z where Q = L L' and mean = Q^-1 b.
Eigen::VectorXd sample_tridiagonal(Eigen::VectorXd diag, const Eigen::VectorXd& off, const Eigen::VectorXd& b,
                                   Rng& rng) {
  const Eigen::Index n = diag.size();
  Eigen::VectorXd l(n);
  Eigen::VectorXd e(std::max<Eigen::Index>(n - 1, 0));
  l[0] = std::sqrt(diag[0]);
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    e[i] = off[i] / l[i];
    const double next = diag[i + 1] - e[i] * e[i];
    if (!(next > 0.0)) throw NumericalError("stochvol: path precision is not positive definite", static_cast<long>(i + 1));
    l[i + 1] = std::sqrt(next);
  }
  Eigen::VectorXd w(n);
  w[0] = b[0] / l[0];
  for (Eigen::Index i = 1; i < n; ++i) w[i] = (b[i] - e[i - 1] * w[i - 1]) / l[i];
  for (Eigen::Index i = 0; i < n; ++i) w[i] += rng.normal();
  Eigen::VectorXd x(n);
  x[n - 1] = w[n - 1] / l[n - 1];
  for (Eigen::Index i = n - 2; i >= 0; --i) x[i] = (w[i] - e[i] * x[i + 1]) / l[i];
  return x;
}

// Sum of squared AR(1) innovations including the stationary initial term.
double ar_sum_of_squares(const VolatilityBlock& b) {
  double s = (1.0 - b.rho * b.rho) * (b.h0 - b.mu) * (b.h0 - b.mu);
  double prev = b.h0;
  for (Eigen::Index t = 0; t < b.h.size(); ++t) {
    const double r = b.h[t] - b.mu - b.rho * (prev - b.mu);
    s += r * r;
    prev = b.h[t];
  }
  return s;
}

void update_zeta(VolatilityBlock& b, Rng& rng) {
  const double T = static_cast<double>(b.h.size());
  const double S = ar_sum_of_squares(b);
  b.zeta = sample_gig({-0.5 * T, std::max(S, 1e-300), 1.0 / b.B_zeta}, rng);
}

// Independence proposal from the flat-prior regression h_t = gamma + rho h_{t-1} + nu_t,
// corrected by the priors on (mu, rho) and the stationary density of h_0.
void update_mu_rho(VolatilityBlock& b, Rng& rng) {
  const Eigen::Index T = b.h.size();
  if (T < 2) return;
  Eigen::Matrix2d XtX = Eigen::Matrix2d::Zero();
  Eigen::Vector2d Xty = Eigen::Vector2d::Zero();
  double prev = b.h0;
  for (Eigen::Index t = 0; t < T; ++t) {
    const Eigen::Vector2d x(1.0, prev);
    XtX += x * x.transpose();
    Xty += x * b.h[t];
    prev = b.h[t];
  }
  const Eigen::LLT<Eigen::Matrix2d> llt(XtX);
  if (llt.info() != Eigen::Success) return;
  const Eigen::Vector2d mean = llt.solve(Xty);
  const Eigen::Matrix2d L = llt.matrixL();
  Eigen::Vector2d z(rng.normal(), rng.normal());
  // Cov = zeta (X'X)^-1  =>  draw = mean + sqrt(zeta) L^-T z
  const Eigen::Vector2d prop = mean + std::sqrt(b.zeta) * L.transpose().triangularView<Eigen::Upper>().solve(z);
  const double gamma_new = prop[0];
  const double rho_new = prop[1];
  if (!(std::abs(rho_new) < 1.0)) return;
  const double mu_new = gamma_new / (1.0 - rho_new);

  auto log_target_extra = [&](double mu, double rho) {
    return log_mu_rho_prior(b, mu, rho) - std::log(1.0 - rho) +
           log_normal_pdf(b.h0, mu, b.zeta / (1.0 - rho * rho));
  };
  const double log_ratio = log_target_extra(mu_new, rho_new) - log_target_extra(b.mu, b.rho);
  if (std::log(rng.uniform()) < log_ratio) {
    b.mu = mu_new;
    b.rho = rho_new;
  }
}

void update_parameters_centered(VolatilityBlock& b, Rng& rng) {
  update_zeta(b, rng);
  update_mu_rho(b, rng);
}

// Noncentered interweaving step: with htilde = (h - mu) / sigma fixed, the
// observations ystar - m = mu + sigma htilde + eps form a Gaussian regression
// in (mu, sigma) with priors N(mu_mean, mu_var) and N(0, B_zeta).
void interweave(VolatilityBlock& b, const Eigen::VectorXd& ystar, const std::vector<int>& comp, Rng& rng) {
  const Eigen::Index T = b.h.size();
  const double sigma = std::sqrt(b.zeta);
  Eigen::Matrix2d P = Eigen::Matrix2d::Zero();
  P(0, 0) = 1.0 / b.mu_var;
  P(1, 1) = 1.0 / b.B_zeta;
  Eigen::Vector2d rhs(b.mu_mean / b.mu_var, 0.0);
  Eigen::VectorXd ht(T);
  for (Eigen::Index t = 0; t < T; ++t) {
    ht[t] = (b.h[t] - b.mu) / sigma;
    const double w = 1.0 / LogChiSquareMixture::var[comp[t]];
    const double y = ystar[t] - LogChiSquareMixture::mean[comp[t]];
    P(0, 0) += w;
    P(0, 1) += w * ht[t];
    P(1, 1) += w * ht[t] * ht[t];
    rhs[0] += w * y;
    rhs[1] += w * y * ht[t];
  }
  P(1, 0) = P(0, 1);
  const double ht0 = (b.h0 - b.mu) / sigma;
  const Eigen::LLT<Eigen::Matrix2d> llt(P);
  if (llt.info() != Eigen::Success) return;
  const Eigen::Vector2d mean = llt.solve(rhs);
  const Eigen::Matrix2d L = llt.matrixL();
  const Eigen::Vector2d z(rng.normal(), rng.normal());
  const Eigen::Vector2d draw = mean + L.transpose().triangularView<Eigen::Upper>().solve(z);
  const double sigma_new = draw[1];
  if (!(std::abs(sigma_new) > 0.0)) return;
  b.mu = draw[0];
  b.zeta = sigma_new * sigma_new;
  b.h = (b.mu + sigma_new * ht.array()).matrix();
  b.h0 = b.mu + sigma_new * ht0;
}

void update_auxiliary_mixture(const Eigen::VectorXd& residuals, VolatilityBlock& b, Rng& rng) {
  const Eigen::Index T = residuals.size();
  using M = LogChiSquareMixture;
  Eigen::VectorXd ystar(T);
  for (Eigen::Index t = 0; t < T; ++t) ystar[t] = std::log(residuals[t] * residuals[t] + kLogSquareOffset);

  std::vector<int> comp(T);
  std::array<double, M::size> lw{};
  for (Eigen::Index t = 0; t < T; ++t) {
    const double e = ystar[t] - b.h[t];
    double top = -1e300;
    for (int k = 0; k < M::size; ++k) {
      const double d = e - M::mean[k];
      lw[k] = std::log(M::prob[k]) - 0.5 * std::log(M::var[k]) - 0.5 * d * d / M::var[k];
      top = std::max(top, lw[k]);
    }
    double total = 0.0;
    for (int k = 0; k < M::size; ++k) total += (lw[k] = std::exp(lw[k] - top));
    double u = rng.uniform() * total;
    int k = 0;
    while (k < M::size - 1 && u > lw[k]) u -= lw[k++];
    comp[t] = k;
  }

  // Joint draw of x_t = h_t - mu, t = 0..T.
  const double q = 1.0 / b.zeta;
  const double r2 = b.rho * b.rho;
  Eigen::VectorXd diag(T + 1);
  Eigen::VectorXd off = Eigen::VectorXd::Constant(T, -b.rho * q);
  Eigen::VectorXd lin = Eigen::VectorXd::Zero(T + 1);
  diag[0] = q;
  for (Eigen::Index t = 1; t <= T; ++t) {
    diag[t] = t < T ? (1.0 + r2) * q : q;
    const double w = 1.0 / M::var[comp[t - 1]];
    diag[t] += w;
    lin[t] = w * (ystar[t - 1] - M::mean[comp[t - 1]] - b.mu);
  }
  if (T == 0) diag[0] = (1.0 - r2) * q;
  const Eigen::VectorXd x = sample_tridiagonal(diag, off, lin, rng);
  b.h0 = b.mu + x[0];
  b.h = (b.mu + x.tail(T).array()).matrix();

  update_parameters_centered(b, rng);
  interweave(b, ystar, comp, rng);
}

void update_random_walk(const Eigen::VectorXd& residuals, VolatilityBlock& b, Rng& rng) {
  const Eigen::Index T = residuals.size();
  auto h_at = [&](Eigen::Index t) { return t == 0 ? b.h0 : b.h[t - 1]; };
  // Sweep x_t = h_t over t = 0..T with the Gaussian AR(1) prior conditional as
  // the local scale reference.
  for (int pass = 0; pass < 2; ++pass) {
    for (Eigen::Index t = 0; t <= T; ++t) {
      double prec = 0.0;
      double lin = 0.0;
      if (t == 0) {
        prec += (1.0 - b.rho * b.rho) / b.zeta;
        lin += prec * b.mu;
      } else {
        prec += 1.0 / b.zeta;
        lin += (b.mu + b.rho * (h_at(t - 1) - b.mu)) / b.zeta;
      }
      if (t < T) {
        const double w = b.rho * b.rho / b.zeta;
        prec += w;
        lin += b.rho * (h_at(t + 1) - b.mu + b.rho * b.mu) / b.zeta;
      }
      const double pm = lin / prec;
      const double cur = h_at(t);
      auto log_target = [&](double h) {
        double lt = -0.5 * prec * (h - pm) * (h - pm);
        if (t > 0) lt += -0.5 * h - 0.5 * residuals[t - 1] * residuals[t - 1] * std::exp(-h);
        return lt;
      };
      const double scale = 2.4 / std::sqrt(prec + (t > 0 ? 0.5 : 0.0));
      const double prop = cur + scale * rng.normal();
      if (std::log(rng.uniform()) < log_target(prop) - log_target(cur)) {
        if (t == 0) b.h0 = prop;
        else b.h[t - 1] = prop;
      }
    }
  }
  update_parameters_centered(b, rng);
}

} // namespace

void update_sv(const Eigen::VectorXd& residuals, VolatilityBlock& block, Rng& rng, SvKernel kernel) {
  if (block.mode != VolMode::Stochastic) throw InvalidArgument("update_sv: block is homoscedastic");
  if (residuals.size() != block.h.size()) throw InvalidArgument("update_sv: residual length differs from path");
  if (!residuals.allFinite()) throw NumericalError("update_sv: non-finite residuals");
  if (kernel == SvKernel::AuxiliaryMixture) {
    update_auxiliary_mixture(residuals, block, rng);
  } else {
    update_random_walk(residuals, block, rng);
  }
  if (!block.h.allFinite() || !std::isfinite(block.h0)) throw NumericalError("update_sv: non-finite log-volatility");
}

void update_sigma2_homoscedastic(const Eigen::VectorXd& residuals, VolatilityBlock& block, Rng& rng) {
  const double T = static_cast<double>(residuals.size());
  block.sigma2 = 1.0 / sample_gamma(block.c0 + 0.5 * T, block.c1 + 0.5 * residuals.squaredNorm(), rng);
}

void draw_volatility_prior(VolatilityBlock& block, Eigen::Index T, Rng& rng) {
  if (block.mode == VolMode::Homoscedastic) {
    block.sigma2 = 1.0 / sample_gamma(block.c0, block.c1, rng);
    return;
  }
  block.mu = block.mu_mean + std::sqrt(block.mu_var) * rng.normal();
  block.rho = 2.0 * sample_beta(block.a_rho, block.b_rho, rng) - 1.0;
  block.zeta = sample_gamma(0.5, 0.5 / block.B_zeta, rng);
  const double sd = std::sqrt(block.zeta);
  block.h0 = block.mu + sd / std::sqrt(1.0 - block.rho * block.rho) * rng.normal();
  block.h.resize(T);
  double prev = block.h0;
  for (Eigen::Index t = 0; t < T; ++t) {
    prev = block.mu + block.rho * (prev - block.mu) + sd * rng.normal();
    block.h[t] = prev;
  }
}

double sample_next_log_variance(const VolatilityBlock& block, Rng& rng) {
  const double last = block.h.size() > 0 ? block.h[block.h.size() - 1] : block.h0;
  return block.mu + block.rho * (last - block.mu) + std::sqrt(block.zeta) * rng.normal();
}

} // namespace ttvp
