#include "ttvp/distributions.hpp"

#include "ttvp/errors.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

namespace ttvp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLogSqrt2Pi = 0.91893853320467274178;

void require(bool cond, const char* msg) {
  if (!cond) throw InvalidArgument(msg);
}

} // namespace

// ---------------------------------------------------------------------------
// Rng

Rng Rng::stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v & 0xffffffffu); };
  auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
  std::seed_seq seq{lo(seed), hi(seed), lo(a), hi(a), lo(b), hi(b), 0x9e3779b9u};
  Rng out;
  out.engine_.seed(seq);
  return out;
}

double Rng::uniform() {
  for (;;) {
    const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    if (u > 0.0) return u;
  }
}

double Rng::normal() { return normal_(engine_); }

// ---------------------------------------------------------------------------
// normal helpers

double log_normal_pdf(double x, double mean, double variance) {
  const double d = x - mean;
  return -kLogSqrt2Pi - 0.5 * std::log(variance) - 0.5 * d * d / variance;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_ccdf(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

double log_normal_cdf(double x) {
  if (x == -kInf) return -kInf;
  if (x < -37.0) {
    const double x2 = x * x;
    const double series = 1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2);
    return -0.5 * x2 - std::log(-x) - kLogSqrt2Pi + std::log(series);
  }
  if (x < 0.0) return std::log(normal_cdf(x));
  return std::log1p(-normal_ccdf(x));
}

double log_normal_ccdf(double x) { return log_normal_cdf(-x); }

double normal_quantile(double p) {
  if (p <= 0.0) return -kInf;
  if (p >= 1.0) return kInf;
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

double normal_cquantile(double q) { return -normal_quantile(q); }

double log_gamma_pdf(double x, double shape, double rate) {
  if (x <= 0.0) return -kInf;
  return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
}

double log_beta_pdf(double x, double a, double b) {
  if (x <= 0.0 || x >= 1.0) return -kInf;
  return std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + (a - 1.0) * std::log(x) +
         (b - 1.0) * std::log1p(-x);
}

// ---------------------------------------------------------------------------
// Gamma / Beta

double sample_gamma(double shape, double rate, Rng& rng) {
  require(shape > 0.0 && std::isfinite(shape), "sample_gamma: shape must be positive and finite");
  require(rate > 0.0 && std::isfinite(rate), "sample_gamma: rate must be positive and finite");
  if (shape >= 1.0) {
    std::gamma_distribution<double> g(shape, 1.0);
    return std::max(g(rng.engine()) / rate, std::numeric_limits<double>::min());
  }
  // Boost the shape and correct with U^(1/shape), in logs to avoid underflow.
  std::gamma_distribution<double> g(shape + 1.0, 1.0);
  const double log_x = std::log(g(rng.engine())) + std::log(rng.uniform()) / shape - std::log(rate);
  return std::max(std::exp(log_x), std::numeric_limits<double>::min());
}

double sample_truncated_gamma(double shape, double rate, double lo, double hi, Rng& rng) {
  require(shape > 0.0 && rate > 0.0, "sample_truncated_gamma: shape and rate must be positive");
  lo = std::max(lo, 0.0);
  require(hi > lo, "sample_truncated_gamma: empty interval");
  if (lo == 0.0 && hi == kInf) return sample_gamma(shape, rate, rng);

  using boost::math::gamma_p;
  using boost::math::gamma_q;
  const double xl = rate * lo;
  const double xh = rate * hi;
  const double pl = gamma_p(shape, xl);
  const double ph = hi == kInf ? 1.0 : gamma_p(shape, xh);
  double x = std::numeric_limits<double>::quiet_NaN();
  if (pl < 0.5 && ph - pl > 1e-10 * ph) {
    const double u = pl + rng.uniform() * (ph - pl);
    x = boost::math::gamma_p_inv(shape, u);
  } else {
    const double ql = gamma_q(shape, xl);
    const double qh = hi == kInf ? 0.0 : gamma_q(shape, xh);
    if (ql - qh > 1e-10 * ql && ql > 0.0) {
      const double v = qh + rng.uniform() * (ql - qh);
      x = boost::math::gamma_q_inv(shape, v);
    }
  }
  if (std::isfinite(x)) return std::clamp(x / rate, lo, hi);

  // Both tail masses underflowed: rejection from an envelope that dominates
  // the kernel on [lo, hi].
  if (lo > 0.0 && lo * rate > shape) {
    const double slope = rate - std::max(shape - 1.0, 0.0) / lo;
    const double log_env_at_lo = (shape - 1.0) * std::log(lo) - rate * lo;
    for (int it = 0; it < 100000; ++it) {
      const double span = hi == kInf ? kInf : hi - lo;
      const double mass = span == kInf ? 1.0 : -std::expm1(-slope * span);
      const double y = lo - std::log1p(-rng.uniform() * mass) / slope;
      const double log_env = log_env_at_lo - slope * (y - lo);
      const double log_target = (shape - 1.0) * std::log(y) - rate * y;
      if (std::log(rng.uniform()) <= log_target - log_env) return std::clamp(y, lo, hi);
    }
  } else {
    // Interval near zero: power-law proposal, accept with exp(-rate (y - lo)).
    const double a_lo = std::pow(lo, shape);
    const double a_hi = std::pow(hi, shape);
    for (int it = 0; it < 100000; ++it) {
      const double y = std::pow(a_lo + rng.uniform() * (a_hi - a_lo), 1.0 / shape);
      if (rng.uniform() <= std::exp(-rate * (y - lo))) return std::clamp(y, lo, hi);
    }
  }
  throw NumericalError("sample_truncated_gamma: rejection sampler did not terminate");
}

double sample_beta(double a, double b, Rng& rng) {
  require(a > 0.0 && b > 0.0, "sample_beta: parameters must be positive");
  const double x = sample_gamma(a, 1.0, rng);
  const double y = sample_gamma(b, 1.0, rng);
  return x / (x + y);
}

// ---------------------------------------------------------------------------
// truncated normal

namespace {

// Standard normal restricted to [a, b] with 0 <= a < b.
double upper_tail_truncnorm(double a, double b, Rng& rng) {
  const double qa = normal_ccdf(a);
  if (qa > 1e-280) {
    const double qb = normal_ccdf(b);
    const double q = qb + rng.uniform() * (qa - qb);
    return std::clamp(normal_cquantile(q), a, b);
  }
  // Deep tail: exponential rejection with the optimal rate.
  const double alpha = 0.5 * (a + std::sqrt(a * a + 4.0));
  if (b != kInf && alpha * (b - a) < 1e-9) return a + rng.uniform() * (b - a);
  const double mass = b == kInf ? 1.0 : -std::expm1(-alpha * (b - a));
  for (;;) {
    const double z = a - std::log1p(-rng.uniform() * mass) / alpha;
    const double d = z - alpha;
    if (rng.uniform() <= std::exp(-0.5 * d * d)) return std::min(z, b);
  }
}

} // namespace

double sample_truncnorm(double mean, double sd, double lo, double hi, Rng& rng) {
  require(sd > 0.0 && std::isfinite(sd), "sample_truncnorm: sd must be positive");
  require(lo < hi || (lo == hi && std::isfinite(lo)), "sample_truncnorm: empty interval");
  if (lo == hi) return lo;
  const double a = (lo - mean) / sd;
  const double b = (hi - mean) / sd;
  double z;
  if (a >= 0.0) {
    z = upper_tail_truncnorm(a, b, rng);
  } else if (b <= 0.0) {
    z = -upper_tail_truncnorm(-b, -a, rng);
  } else {
    const double pa = normal_cdf(a);
    const double pb = normal_cdf(b);
    z = std::clamp(normal_quantile(pa + rng.uniform() * (pb - pa)), a, b);
  }
  return std::clamp(mean + sd * z, lo, hi);
}

// ---------------------------------------------------------------------------
// GIG

bool GigParams::valid() const {
  if (!std::isfinite(kappa) || !std::isfinite(chi) || !std::isfinite(psi)) return false;
  if (chi < 0.0 || psi < 0.0) return false;
  if (chi > 0.0 && psi > 0.0) return true;
  if (chi > 0.0 && kappa < 0.0) return true;
  if (psi > 0.0 && kappa > 0.0) return true;
  return false;
}

double gig_log_kernel(const GigParams& p, double z) {
  if (z <= 0.0) return -kInf;
  return (p.kappa - 1.0) * std::log(z) - 0.5 * (p.chi / z + p.psi * z);
}

namespace {

// Mode of the standardized density x^(lambda-1) exp(-omega/2 (x + 1/x)).
double gig_mode(double lambda, double omega) {
  if (lambda >= 1.0) return (std::sqrt((lambda - 1.0) * (lambda - 1.0) + omega * omega) + (lambda - 1.0)) / omega;
  return omega / (std::sqrt((1.0 - lambda) * (1.0 - lambda) + omega * omega) + (1.0 - lambda));
}

// Ratio-of-uniforms without mode shift; lambda >= 0.
double gig_rou_noshift(double lambda, double omega, Rng& rng) {
  const double t = 0.5 * (lambda - 1.0);
  const double s = 0.25 * omega;
  const double xm = gig_mode(lambda, omega);
  const double nc = t * std::log(xm) - s * (xm + 1.0 / xm);
  const double ym = ((lambda + 1.0) + std::sqrt((lambda + 1.0) * (lambda + 1.0) + omega * omega)) / omega;
  const double um = std::exp(0.5 * (lambda + 1.0) * std::log(ym) - s * (ym + 1.0 / ym) - nc);
  for (;;) {
    const double u = um * rng.uniform();
    const double v = rng.uniform();
    const double x = u / v;
    if (std::log(v) <= t * std::log(x) - s * (x + 1.0 / x) - nc) return x;
  }
}

// Ratio-of-uniforms with mode shift; used when lambda > 2 or omega > 3.
double gig_rou_shift(double lambda, double omega, Rng& rng) {
  const double t = 0.5 * (lambda - 1.0);
  const double s = 0.25 * omega;
  const double xm = gig_mode(lambda, omega);
  const double nc = t * std::log(xm) - s * (xm + 1.0 / xm);

  // Roots of the cubic giving the bounding rectangle.
  const double a = -(2.0 * (lambda + 1.0) / omega + xm);
  const double b = 2.0 * (lambda - 1.0) * xm / omega - 1.0;
  const double c = xm;
  const double p = b - a * a / 3.0;
  const double q = (2.0 * a * a * a) / 27.0 - (a * b) / 3.0 + c;
  const double fi = std::acos(-q / (2.0 * std::sqrt(-(p * p * p) / 27.0)));
  const double fak = 2.0 * std::sqrt(-p / 3.0);
  const double y1 = fak * std::cos(fi / 3.0) - a / 3.0;
  const double y2 = fak * std::cos(fi / 3.0 + 4.0 / 3.0 * std::numbers::pi) - a / 3.0;
  const double uplus = (y1 - xm) * std::exp(t * std::log(y1) - s * (y1 + 1.0 / y1) - nc);
  const double uminus = (y2 - xm) * std::exp(t * std::log(y2) - s * (y2 + 1.0 / y2) - nc);
  for (;;) {
    const double u = uminus + rng.uniform() * (uplus - uminus);
    const double v = rng.uniform();
    const double x = u / v + xm;
    if (x <= 0.0) continue;
    if (std::log(v) <= t * std::log(x) - s * (x + 1.0 / x) - nc) return x;
  }
}

// Rejection from a three-piece envelope; 0 <= lambda < 1 and small omega.
double gig_small_omega(double lambda, double omega, Rng& rng) {
  const double xm = gig_mode(lambda, omega);
  const double x0 = omega / (1.0 - lambda);
  const double k0 = std::exp((lambda - 1.0) * std::log(xm) - 0.5 * omega * (xm + 1.0 / xm));
  std::array<double, 3> area{};
  area[0] = k0 * x0;
  double k1;
  double k2;
  if (x0 >= 2.0 / omega) {
    k1 = 0.0;
    area[1] = 0.0;
    k2 = std::pow(x0, lambda - 1.0);
    area[2] = k2 * 2.0 * std::exp(-omega * x0 / 2.0) / omega;
  } else {
    k1 = std::exp(-omega);
    area[1] = lambda == 0.0 ? k1 * std::log(2.0 / (omega * omega))
                            : k1 / lambda * (std::pow(2.0 / omega, lambda) - std::pow(x0, lambda));
    k2 = std::pow(2.0 / omega, lambda - 1.0);
    area[2] = k2 * 2.0 * std::exp(-1.0) / omega;
  }
  const double total = area[0] + area[1] + area[2];
  for (;;) {
    double v = total * rng.uniform();
    double x;
    double hx;
    if (v <= area[0]) {
      x = x0 * v / area[0];
      hx = k0;
    } else if ((v -= area[0]) <= area[1]) {
      if (lambda == 0.0) {
        x = omega * std::exp(std::exp(omega) * v);
        hx = k1 / x;
      } else {
        x = std::pow(std::pow(x0, lambda) + lambda / k1 * v, 1.0 / lambda);
        hx = k1 * std::pow(x, lambda - 1.0);
      }
    } else {
      v -= area[1];
      const double edge = std::max(x0, 2.0 / omega);
      x = -2.0 / omega * std::log(std::exp(-omega / 2.0 * edge) - omega / (2.0 * k2) * v);
      hx = k2 * std::exp(-omega / 2.0 * x);
    }
    const double u = rng.uniform() * hx;
    if (std::log(u) <= (lambda - 1.0) * std::log(x) - omega / 2.0 * (x + 1.0 / x)) return x;
  }
}

} // namespace

double sample_gig(const GigParams& params, Rng& rng) {
  if (!params.valid()) throw InvalidArgument("sample_gig: parameters outside the admissible region");
  const double kappa = params.kappa;
  if (params.chi == 0.0) return sample_gamma(kappa, 0.5 * params.psi, rng);
  if (params.psi == 0.0) return 1.0 / sample_gamma(-kappa, 0.5 * params.chi, rng);

  const double omega = std::sqrt(params.chi * params.psi);
  if (omega < 1e-100) {
    // Numerically at the boundary; the limiting law is exact to working precision.
    if (kappa < 0.0) return 1.0 / sample_gamma(-kappa, 0.5 * params.chi, rng);
    if (kappa > 0.0) return sample_gamma(kappa, 0.5 * params.psi, rng);
  }
  const double alpha = std::sqrt(params.chi / params.psi);
  const double lambda = std::abs(kappa);

  double x;
  if (lambda > 2.0 || omega > 3.0) {
    x = gig_rou_shift(lambda, omega, rng);
  } else if (lambda >= 1.0 - 2.25 * omega * omega || omega > 0.2) {
    x = gig_rou_noshift(lambda, omega, rng);
  } else {
    x = gig_small_omega(lambda, omega, rng);
  }
  // GIG(-lambda) is the reciprocal of GIG(lambda) in the standardized form.
  return kappa < 0.0 ? alpha / x : alpha * x;
}

double gig_moment_oracle(const GigParams& params, int k) {
  if (!params.valid()) throw InvalidArgument("gig_moment_oracle: invalid parameters");
  if (k == 0) return 1.0;
  const double chi = params.chi;
  const double psi = params.psi;

  // Integrate exp(c x - (chi e^-x + psi e^x)/2) over x = log z.
  auto integral = [&](double c, double& log_scale) {
    if (psi == 0.0 && c >= 0.0) throw InvalidArgument("gig_moment_oracle: moment does not exist");
    if (chi == 0.0 && c <= 0.0) throw InvalidArgument("gig_moment_oracle: moment does not exist");
    const double disc = std::sqrt(c * c + chi * psi);
    const double w = c >= 0.0 ? (c + disc) / psi : chi / (disc - c);
    const double mode = std::log(w);
    auto g = [&](double x) { return c * x - 0.5 * (chi * std::exp(-x) + psi * std::exp(x)); };
    const double gmax = g(mode);
    const double curv = 0.5 * (chi / w + psi * w);
    const double step = curv > 0.0 ? 1.0 / std::sqrt(curv) : 1.0;
    double lo = mode - step;
    for (double h = step; g(lo) > gmax - 60.0; h *= 2.0) lo = mode - h;
    double hi = mode + step;
    for (double h = step; g(hi) > gmax - 60.0; h *= 2.0) hi = mode + h;
    auto f = [&](double x) { return std::exp(g(x) - gmax); };
    using Quad = boost::math::quadrature::gauss_kronrod<double, 61>;
    double err_l = 0.0;
    double err_r = 0.0;
    const double left = Quad::integrate(f, lo, mode, 20, 1e-13, &err_l);
    const double right = Quad::integrate(f, mode, hi, 20, 1e-13, &err_r);
    const double total = left + right;
    if (!(total > 0.0) || (err_l + err_r) > 1e-8 * total) {
      throw NumericalError("gig_moment_oracle: quadrature did not converge");
    }
    log_scale = gmax;
    return total;
  };

  double s0 = 0.0;
  double sk = 0.0;
  const double i0 = integral(params.kappa, s0);
  const double ik = integral(params.kappa + k, sk);
  return std::exp(sk - s0) * ik / i0;
}

} // namespace ttvp
