#include "tagshield/correlation_lab.hpp"

#include "tagshield/otp_cipher.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <mutex>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace tagshield {

namespace {

Eigen::MatrixXd inverse_sqrt(const Eigen::MatrixXd& S) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(S);
  if (eig.info() != Eigen::Success) throw std::runtime_error("covariance eigendecomposition failed");
  Eigen::VectorXd d = eig.eigenvalues().cwiseMax(kCcaRidge).cwiseSqrt().cwiseInverse();
  return eig.eigenvectors() * d.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace

double cca_first_correlation(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y) {
  const auto T = X.rows();
  if (Y.rows() != T) throw std::invalid_argument("cca: X and Y have different row counts");
  if (X.cols() == 0 || Y.cols() == 0) throw std::invalid_argument("cca: empty variable set");
  if (T <= std::max(X.cols(), Y.cols()) + 10) throw std::invalid_argument("cca: too few samples");
  if (!X.allFinite() || !Y.allFinite()) throw std::invalid_argument("cca: non-finite entries");

  const Eigen::MatrixXd Xc = X.rowwise() - X.colwise().mean();
  const Eigen::MatrixXd Yc = Y.rowwise() - Y.colwise().mean();
  const double scale = 1.0 / static_cast<double>(T - 1);

  Eigen::MatrixXd Sxx = scale * Xc.transpose() * Xc;
  Eigen::MatrixXd Syy = scale * Yc.transpose() * Yc;
  Sxx.diagonal().array() += kCcaRidge;
  Syy.diagonal().array() += kCcaRidge;
  const Eigen::MatrixXd Sxy = scale * Xc.transpose() * Yc;

  const Eigen::MatrixXd M = inverse_sqrt(Sxx) * Sxy * inverse_sqrt(Syy);
  // Top singular value via the smaller Gram matrix.
  const Eigen::MatrixXd G = M.rows() <= M.cols() ? Eigen::MatrixXd(M * M.transpose())
                                                 : Eigen::MatrixXd(M.transpose() * M);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(G, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw std::runtime_error("cca eigensolve failed");
  const double top = std::max(0.0, eig.eigenvalues()(eig.eigenvalues().size() - 1));
  return std::clamp(std::sqrt(top), 0.0, 1.0);
}

ScrambledCode fixed_bits_scramble(const HiddenTag& tag, std::size_t bit_budget,
                                  const std::vector<std::size_t>& positions, RandomSource& rng) {
  const std::size_t b = tag.bit_width();
  if (positions.size() != b) throw std::invalid_argument("need exactly one position per tag bit");
  if (bit_budget < b) throw BudgetError("bit budget smaller than tag width");
  std::vector<bool> used(bit_budget, false);
  for (auto p : positions) {
    if (p >= bit_budget) throw std::out_of_range("bit position outside the budget");
    if (used[p]) throw std::invalid_argument("bit positions must be distinct");
    used[p] = true;
  }
  BigInt code = random_bits(rng, bit_budget);
  for (std::size_t j = 0; j < b; ++j) {
    if (mpz_tstbit(tag.value().get_mpz_t(), j)) {
      mpz_setbit(code.get_mpz_t(), positions[j]);
    } else {
      mpz_clrbit(code.get_mpz_t(), positions[j]);
    }
  }
  return ScrambledCode(code, bit_budget);
}

std::string scheme_name(Scheme s) { return s == Scheme::quadratic ? "quadratic" : "fixed-bits"; }

Scheme parse_scheme(const std::string& s) {
  if (s == "quadratic") return Scheme::quadratic;
  if (s == "fixed-bits") return Scheme::fixed_bits;
  throw std::invalid_argument("unknown scheme: " + s);
}

std::string pad_mode_name(PadMode m) { return m == PadMode::fixed ? "fixed" : "fresh"; }

PadMode parse_pad_mode(const std::string& s) {
  if (s == "fixed") return PadMode::fixed;
  if (s == "fresh") return PadMode::fresh;
  throw std::invalid_argument("unknown pad mode: " + s);
}

namespace {

void write_bits(Eigen::MatrixXd& M, Eigen::Index row, const BigInt& value, std::size_t width) {
  for (std::size_t j = 0; j < width; ++j) {
    M(row, static_cast<Eigen::Index>(j)) = mpz_tstbit(value.get_mpz_t(), j) ? 1.0 : 0.0;
  }
}

}  // namespace

BitDataset sample_dataset(Scheme scheme, std::size_t b, std::size_t B, std::size_t T, bool encrypted,
                          PadMode pad_mode, RandomSource& rng) {
  if (T == 0) throw std::invalid_argument("dataset needs at least one sample");
  if (b == 0) throw std::invalid_argument("tag width must be positive");
  if (scheme == Scheme::quadratic && B < 2 * b) throw BudgetError("quadratic scheme needs B >= 2b");
  if (scheme == Scheme::fixed_bits && B < b) throw BudgetError("fixed-bits scheme needs B >= b");

  std::vector<BigInt> tags(T);
  for (auto& t : tags) t = random_bits(rng, b);

  std::vector<std::size_t> positions;
  if (scheme == Scheme::fixed_bits) {
    std::vector<std::size_t> all(B);
    std::iota(all.begin(), all.end(), 0);
    for (std::size_t j = 0; j < b; ++j) std::swap(all[j], all[j + uniform_below(rng, B - j)]);
    positions.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(b));
  }

  std::vector<BigInt> codes(T);
  for (std::size_t t = 0; t < T; ++t) {
    HiddenTag tag(tags[t], b);
    codes[t] = scheme == Scheme::quadratic ? encode_with_budget(tag, B, rng).value()
                                           : fixed_bits_scramble(tag, B, positions, rng).value();
  }

  if (encrypted) {
    SharedKey key{random_bits(rng, 256)};
    PadKey shared_pad;
    if (pad_mode == PadMode::fixed) shared_pad = derive_pad(key, random_nonce(rng), B);
    for (auto& c : codes) {
      const PadKey pad = pad_mode == PadMode::fixed ? shared_pad : derive_pad(key, random_nonce(rng), B);
      c = xor_pad(BitVector::from_integer(c, B), pad).to_integer();
    }
  }

  BitDataset ds{Eigen::MatrixXd(T, b), Eigen::MatrixXd(T, B), scheme, encrypted};
  for (std::size_t t = 0; t < T; ++t) {
    write_bits(ds.X, static_cast<Eigen::Index>(t), tags[t], b);
    write_bits(ds.Y, static_cast<Eigen::Index>(t), codes[t], B);
  }
  return ds;
}

std::string CorrelationReport::to_csv() const {
  std::string out = "scheme,encrypted,b,B,T,seed,rho\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%s,%zu,%zu,%zu,%llu,%.10f\n", scheme_name(r.scheme).c_str(),
                  r.encrypted ? "true" : "false", r.b, r.B, r.T, static_cast<unsigned long long>(r.seed), r.rho);
    out += buf;
  }
  return out;
}

std::uint64_t cell_seed(std::uint64_t seed, std::size_t b, std::size_t B) {
  return mix64(mix64(mix64(seed) ^ b) ^ B);
}

CorrelationReport run_curve_experiment(const CurveConfig& config) {
  if (config.b_list.empty() || config.ratio_list.empty()) throw std::invalid_argument("empty b or ratio list");
  if (config.schemes.empty() || config.encrypted_modes.empty() || config.seeds.empty()) {
    throw std::invalid_argument("empty scheme, encryption or seed list");
  }
  for (auto b : config.b_list) {
    for (auto ratio : config.ratio_list) {
      if (b == 0 || ratio == 0) throw std::invalid_argument("b and ratio must be positive");
      for (auto s : config.schemes) {
        if (s == Scheme::quadratic && ratio < 2) throw BudgetError("quadratic scheme needs ratio >= 2");
      }
    }
  }

  CorrelationReport report;
  for (auto b : config.b_list)
    for (auto ratio : config.ratio_list)
      for (auto scheme : config.schemes)
        for (bool enc : config.encrypted_modes)
          for (auto seed : config.seeds) report.rows.push_back({scheme, enc, b, ratio * b, config.samples, seed, 0.0});

  unsigned workers = config.threads ? config.threads : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, report.rows.size()));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;

  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < report.rows.size();) {
      auto& row = report.rows[i];
      try {
        SeededRandom rng(cell_seed(row.seed, row.b, row.B));
        auto ds = sample_dataset(row.scheme, row.b, row.B, row.T, row.encrypted, config.pad_mode, rng);
        row.rho = cca_first_correlation(ds.X, ds.Y);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);
  return report;
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("spearman: need two equal-length samples");
  auto rx = average_ranks(x);
  auto ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0 || syy == 0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

std::string GaussianDemoResult::to_json() const {
  nlohmann::ordered_json j;
  j["rho"] = rho;
  j["sigma_m"] = sigma_m;
  j["sigma_h"] = sigma_h;
  j["beta"] = beta;
  j["var_ratio"] = var_ratio;
  j["standard_error"] = standard_error;
  j["closed_form_ratio"] = closed_form_ratio;
  j["threshold_rho"] = threshold_rho;
  j["trials"] = trials;
  return j.dump(2);
}

GaussianDemoResult gaussian_threshold_demo(double rho, double sigma_m, double sigma_h, double beta,
                                           std::size_t trials, RandomSource& rng) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw std::invalid_argument("rho must lie in [0, 1]");
  if (!(sigma_h >= 0.0 && sigma_m > sigma_h)) throw std::invalid_argument("need sigma_m > sigma_h >= 0");
  if (!(beta > 0.0) || !std::isfinite(beta) || !std::isfinite(sigma_m)) {
    throw std::invalid_argument("beta and sigma_m must be finite and positive");
  }
  if (trials < 10000) throw std::invalid_argument("need at least 10^4 trials");

  const double tag_sd = sigma_m / beta;  // spread of h implied by m = beta*h
  const double residual_sd = std::sqrt(1.0 - rho * rho);

  // Welford-style accumulation of the two variances and the covariance.
  double mean_m = 0, mean_h = 0, m2_m = 0, m2_h = 0, c_mh = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    const double z_tag = standard_normal(rng);
    const double z_own = standard_normal(rng);
    const double z_obs = standard_normal(rng);
    const double m = sigma_m * (rho * z_tag + residual_sd * z_own);
    const double h_obs = tag_sd * z_tag + sigma_h * z_obs;

    const double n = static_cast<double>(t + 1);
    const double dm = m - mean_m;
    const double dh = h_obs - mean_h;
    mean_m += dm / n;
    mean_h += dh / n;
    m2_m += dm * (m - mean_m);
    m2_h += dh * (h_obs - mean_h);
    c_mh += dm * (h_obs - mean_h);
  }

  GaussianDemoResult r{};
  r.rho = rho;
  r.sigma_m = sigma_m;
  r.sigma_h = sigma_h;
  r.beta = beta;
  r.trials = trials;
  const double residual = m2_m - c_mh * c_mh / m2_h;
  r.var_ratio = residual / m2_m;
  r.standard_error = r.var_ratio * std::sqrt(2.0 / static_cast<double>(trials - 2));
  const double tag_var = tag_sd * tag_sd;
  r.closed_form_ratio = 1.0 - rho * rho * tag_var / (tag_var + sigma_h * sigma_h);
  const double sigma = beta * sigma_h;
  r.threshold_rho = 1.0 / std::sqrt(2.0) + 0.5 * sigma * sigma_m / (sigma * sigma + sigma_m * sigma_m);
  return r;
}

}  // namespace tagshield
