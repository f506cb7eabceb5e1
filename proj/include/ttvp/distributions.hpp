#ifndef TTVP_DISTRIBUTIONS_HPP
#define TTVP_DISTRIBUTIONS_HPP

#include <cstdint>
#include <limits>
#include <random>

namespace ttvp {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Random number stream. Every sampler takes one of these explicitly; there is
/// no global generator.
class Rng {
public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  /// Independent stream derived from (seed, a, b), e.g. (seed, equation, chain).
  static Rng stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

  /// Uniform on the open interval (0, 1).
  double uniform();
  double normal();
  std::mt19937_64& engine() { return engine_; }

private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

// Standard normal helpers, all stable in the tails.
double log_normal_pdf(double x, double mean, double variance);
double normal_cdf(double x);
double normal_ccdf(double x); // 1 - Phi(x)
double log_normal_cdf(double x);
double log_normal_ccdf(double x);
double normal_quantile(double p);
double normal_cquantile(double q); // x such that 1 - Phi(x) = q

double log_gamma_pdf(double x, double shape, double rate);
double log_beta_pdf(double x, double a, double b);

/// Gamma(shape, rate), mean shape/rate.
double sample_gamma(double shape, double rate, Rng& rng);

/// Gamma(shape, rate) restricted to [lo, hi] (hi may be +inf), by inversion.
double sample_truncated_gamma(double shape, double rate, double lo, double hi, Rng& rng);

double sample_beta(double a, double b, Rng& rng);

/// N(mean, sd^2) truncated to [lo, hi]; either bound may be infinite.
double sample_truncnorm(double mean, double sd, double lo, double hi, Rng& rng);

/// Generalized inverse Gaussian with density proportional to
/// z^(kappa-1) exp(-(chi/z + psi z)/2).
struct GigParams {
  double kappa = 0.0;
  double chi = 0.0;
  double psi = 0.0;

  bool valid() const;
};

double gig_log_kernel(const GigParams& params, double z);

/// Draw from GIG(kappa, chi, psi). Ratio-of-uniforms (with or without mode
/// shift) or the bounded-envelope rejection scheme for small omega = sqrt(chi psi),
/// selected by region; Gamma / inverse-Gamma limits when chi or psi vanishes.
double sample_gig(const GigParams& params, Rng& rng);

/// k-th raw moment E[Z^k] by adaptive Gauss-Kronrod quadrature of the kernel
/// in log coordinates. Throws if the moment does not exist.
double gig_moment_oracle(const GigParams& params, int k);

} // namespace ttvp

#endif
