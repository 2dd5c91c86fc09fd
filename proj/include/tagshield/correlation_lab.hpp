#pragma once

#include "tagshield/random.hpp"
#include "tagshield/triangular_codec.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace tagshield {

/// Ridge added to both covariance diagonals; constant bit columns are common.
inline constexpr double kCcaRidge = 1e-8;

/// Largest canonical correlation between the columns of X (T x p) and Y (T x q).
/// Columns are mean-centred internally; covariances get a kCcaRidge ridge and
/// the result is the top singular value of Sxx^-1/2 Sxy Syy^-1/2, clamped to [0, 1].
/// Requires T > max(p, q) + 10 and finite entries.
double cca_first_correlation(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y);

/// Places the b bits of the tag at `positions` (bit j of h -> bit positions[j])
/// and fills the other B - b bits at random.
ScrambledCode fixed_bits_scramble(const HiddenTag& tag, std::size_t bit_budget,
                                  const std::vector<std::size_t>& positions, RandomSource& rng);

enum class Scheme { quadratic, fixed_bits };
enum class PadMode { fixed, fresh };

std::string scheme_name(Scheme s);
Scheme parse_scheme(const std::string& s);
std::string pad_mode_name(PadMode m);
PadMode parse_pad_mode(const std::string& s);

/// T paired observations: tag bits X (T x b) and code or cipher bits Y (T x B).
struct BitDataset {
  Eigen::MatrixXd X;
  Eigen::MatrixXd Y;
  Scheme scheme;
  bool encrypted;
};

/// Draws T uniform b-bit tags, randomizes each with `scheme` into B bits and,
/// when `encrypted`, XORs every code with a pad derived from a random key:
/// one pad for all rows (PadMode::fixed) or one per row (PadMode::fresh).
/// Tags are drawn first, then codes, then pads, so datasets sampled from equal
/// seeds share their tags across schemes and their codes across pad choices.
BitDataset sample_dataset(Scheme scheme, std::size_t b, std::size_t B, std::size_t T, bool encrypted,
                          PadMode pad_mode, RandomSource& rng);

struct CorrelationRow {
  Scheme scheme;
  bool encrypted;
  std::size_t b;
  std::size_t B;
  std::size_t T;
  std::uint64_t seed;
  double rho;
};

struct CorrelationReport {
  std::vector<CorrelationRow> rows;

  /// scheme,encrypted,b,B,T,seed,rho
  std::string to_csv() const;
};

struct CurveConfig {
  std::vector<std::size_t> b_list{10, 30, 100};
  std::vector<std::size_t> ratio_list{2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::size_t samples = 10000;
  std::vector<Scheme> schemes{Scheme::quadratic, Scheme::fixed_bits};
  std::vector<bool> encrypted_modes{false};
  PadMode pad_mode = PadMode::fresh;
  std::vector<std::uint64_t> seeds;
  unsigned threads = 0;  // 0: hardware concurrency
};

/// Seed of the generator used for one (b, B, seed) cell. Independent of scheme
/// and encryption so those variants see the same tags.
std::uint64_t cell_seed(std::uint64_t seed, std::size_t b, std::size_t B);

/// One row per (b, ratio, scheme, encrypted, seed), in that nesting order.
/// Cells run in parallel; output is identical for any thread count.
CorrelationReport run_curve_experiment(const CurveConfig& config);

/// Spearman rank correlation with average ranks for ties.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

struct GaussianDemoResult {
  double rho;
  double sigma_m;
  double sigma_h;
  double beta;
  double var_ratio;          // Monte Carlo Var(m | h_hat) / Var(m)
  double standard_error;     // of var_ratio
  double closed_form_ratio;  // bivariate-normal value of var_ratio
  double threshold_rho;      // 1/sqrt(2) + sigma*sigma_m / (2 (sigma^2 + sigma_m^2)), sigma = beta*sigma_h
  std::size_t trials;

  std::string to_json() const;
};

/// Monte Carlo of the manifest/tag Gaussian model around the ground truth
/// m = h = 0. The manifest measurement has standard deviation sigma_m and
/// correlation rho with the tag h, whose spread follows m = beta*h; the tag is
/// observed with noise sigma_h. The result compares the residual variance of
/// m after linear regression on the observed tag with the variance of m alone.
GaussianDemoResult gaussian_threshold_demo(double rho, double sigma_m, double sigma_h, double beta,
                                           std::size_t trials, RandomSource& rng);

}  // namespace tagshield
