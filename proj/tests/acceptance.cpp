// Acceptance suite: one line per criterion, nonzero exit if any fails.

#include "tagshield/correlation_lab.hpp"
#include "tagshield/group_keydist.hpp"
#include "tagshield/otp_cipher.hpp"
#include "tagshield/triangular_codec.hpp"

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

using namespace tagshield;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
  bool informational = false;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(int id, const std::string& title, const std::function<Outcome()>& check) {
  const auto t0 = Clock::now();
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  if (!o.pass) ++failures;
  std::printf("[%s] %2d %s: %s (%.1f s)\n", o.informational ? "INFO" : o.pass ? "PASS" : "FAIL", id, title.c_str(), o.detail.c_str(),
              seconds_since(t0));
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

constexpr std::size_t kSamples = 10000;
constexpr int kSeeds = 20;

double rho_of(Scheme scheme, std::size_t b, std::size_t B, bool encrypted, PadMode pad, std::uint64_t seed) {
  SeededRandom rng(cell_seed(seed, b, B));
  auto ds = sample_dataset(scheme, b, B, kSamples, encrypted, pad, rng);
  return cca_first_correlation(ds.X, ds.Y);
}

Outcome codec_round_trip() {
  const auto t0 = Clock::now();
  SeededRandom rng(1);
  long failures_seen = 0;
  const BigInt M = 1024;
  for (unsigned long n = 0; n < 1024; ++n) failures_seen += decode(encode(n, M, rng)) != n;
  for (int i = 0; i < 100000; ++i) {
    BigInt m = 1 + random_bits(rng, 1 + uniform_below(rng, 60));
    BigInt n = uniform_in(rng, 0, m - 1);
    failures_seen += decode(encode(n, m, rng)) != n;
  }
  const double t = seconds_since(t0);
  return {failures_seen == 0 && t < 10.0, fmt("%ld failures in 101024 round trips, %.2f s (limit 10 s)", failures_seen, t)};
}

Outcome worked_example() {
  std::vector<BigInt> codes;
  bool ok = true;
  for (int k : {4, 5, 6}) {
    codes.push_back(encode_in_slot(2, k));
    ok = ok && alphabet_slots(2, 5).lo <= k && k <= alphabet_slots(2, 5).hi;
  }
  ok = ok && codes == std::vector<BigInt>{12, 17, 23};
  for (const auto& c : codes) ok = ok && decode(c) == 2;
  return {ok, fmt("codes {%s, %s, %s}, all decode to 2", codes[0].get_str().c_str(), codes[1].get_str().c_str(),
                  codes[2].get_str().c_str())};
}

struct ExchangeRecord {
  std::size_t n;
  GroupParams params;
  ProtocolRun run;
  SharedKey reference;
};

std::vector<ExchangeRecord> exchange_runs;

Outcome key_agreement() {
  const auto t0 = Clock::now();
  SeededRandom group_rng(512);
  const auto params = gen_group_params(512, group_rng);
  std::size_t disagreements = 0, total = 0;
  for (std::size_t n : {1, 2, 3, 8, 16, 64}) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      SeededRandom rng(mix64(seed * 131 + n));
      std::vector<PrivateExponent> secrets;
      PrivateExponent own;
      MessageBus bus;
      auto run = run_protocol(n, params, bus, rng, &secrets, &own);
      auto ref = reference_key(params, secrets, own);
      if (!run.all_agree() || !(run.distributor_key == ref)) ++disagreements;
      ++total;
      exchange_runs.push_back({n, params, std::move(run), ref});
    }
  }
  const double t = seconds_since(t0);
  return {disagreements == 0 && t < 60.0,
          fmt("%zu disagreements over %zu runs (512-bit group), %.1f s (limit 60 s)", disagreements, total, t)};
}

Outcome transcript_safety() {
  if (exchange_runs.empty()) return {false, "no runs recorded by criterion 3"};
  std::size_t over_bound = 0, outside = 0, exposed = 0, payloads = 0;
  for (const auto& r : exchange_runs) {
    if (count_messages(r.run.transcript).total() > 5 * r.n) ++over_bound;
    for (const auto& m : r.run.transcript.messages) {
      ++payloads;
      if (mod_exp(m.payload, r.params.q, r.params.p) != 1) ++outside;
    }
    if (!key_hidden(adversary_view(r.run.transcript), r.reference)) ++exposed;
  }
  return {over_bound + outside + exposed == 0,
          fmt("%zu runs over 5n, %zu of %zu payloads outside the subgroup, %zu runs exposing K", over_bound, outside,
              payloads, exposed)};
}

Outcome fixed_bits_baseline() {
  int ok = 0;
  double lo = 1.0;
  for (int s = 0; s < kSeeds; ++s) {
    const double rho = rho_of(Scheme::fixed_bits, 10, 20, false, PadMode::fresh, 5000 + s);
    ok += rho >= 0.99;
    lo = std::min(lo, rho);
  }
  return {ok == kSeeds, fmt("%d/%d seeds with rho >= 0.99 (min %.6f)", ok, kSeeds, lo)};
}

Outcome quadratic_separation() {
  int below = 0, trending = 0;
  double hi = 0.0;
  for (int s = 0; s < kSeeds; ++s) {
    const std::uint64_t seed = 6000 + s;
    std::vector<double> ratios, rhos;
    for (std::size_t ratio = 2; ratio <= 10; ++ratio) {
      const double rho = rho_of(Scheme::quadratic, 10, 10 * ratio, false, PadMode::fresh, seed);
      if (ratio == 2) {
        below += rho < 0.5;
        hi = std::max(hi, rho);
      }
      ratios.push_back(static_cast<double>(ratio));
      rhos.push_back(rho);
    }
    trending += spearman(ratios, rhos) > 0;
  }
  return {below == kSeeds && trending >= 16,
          fmt("B=2b: %d/%d seeds with rho < 0.5 (max %.4f); Spearman > 0 over B/b=2..10 in %d/%d seeds (need 16)",
              below, kSeeds, hi, trending, kSeeds)};
}

int count_quadratic_not_above(std::size_t b, PadMode pad, std::uint64_t base) {
  int wins = 0;
  for (int s = 0; s < kSeeds; ++s) {
    const double q = rho_of(Scheme::quadratic, b, 2 * b, true, pad, base + s);
    const double f = rho_of(Scheme::fixed_bits, b, 2 * b, true, pad, base + s);
    wins += q <= f;
  }
  return wins;
}

Outcome encryption_comparison() {
  const int w10 = count_quadratic_not_above(10, PadMode::fresh, 7000);
  const int w30 = count_quadratic_not_above(30, PadMode::fresh, 7000);
  const int need = 16;  // 80% of 20
  return {w10 >= need && w30 >= need,
          fmt("fresh pads, B=2b: quadratic <= fixed-bits in %d/20 (b=10) and %d/20 (b=30) seeds, need %d", w10, w30,
              need)};
}

Outcome encryption_comparison_fixed_pad() {
  const int w10 = count_quadratic_not_above(10, PadMode::fixed, 7000);
  const int w30 = count_quadratic_not_above(30, PadMode::fixed, 7000);
  return {true, fmt("one pad reused for all rows: %d/20 (b=10), %d/20 (b=30)", w10, w30), true};
}

Outcome gaussian_threshold() {
  SeededRandom rng(8);
  const auto strong = gaussian_threshold_demo(0.9, 1.0, 0.0, 1.0, 1000000, rng);
  const auto weak = gaussian_threshold_demo(0.5, 1.0, 0.0, 1.0, 1000000, rng);
  const bool reduced = strong.var_ratio < 1.0;
  const bool weak_unchanged = std::abs(weak.var_ratio - 1.0) <= 3 * weak.standard_error;
  auto agrees = [](const GaussianDemoResult& r) {
    return std::abs(r.var_ratio - r.closed_form_ratio) <= 0.01 * r.closed_form_ratio;
  };
  const bool oracle_ok = agrees(strong) && agrees(weak);
  return {reduced && weak_unchanged && oracle_ok,
          fmt("rho=0.9: ratio %.4f (<1: %s); rho=0.5: ratio %.4f, |ratio-1| = %.1f SE (<=3: %s); "
              "closed form %.4f / %.4f, MC within 1%%: %s",
              strong.var_ratio, reduced ? "yes" : "no", weak.var_ratio,
              std::abs(weak.var_ratio - 1.0) / weak.standard_error, weak_unchanged ? "yes" : "no",
              strong.closed_form_ratio, weak.closed_form_ratio, oracle_ok ? "yes" : "no")};
}

int run_command(const std::string& cmd) {
  const int raw = std::system(cmd.c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome cli_determinism() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / ("tagshield-acceptance-" + std::to_string(::getpid()));
  fs::create_directories(dir);
  const std::string base = std::string(TAGSHIELD_CLI) + " --seed 42 attack-curve --quick --out ";
  const auto t0 = Clock::now();
  const int s1 = run_command(base + (dir / "a.csv").string());
  const double t1 = seconds_since(t0);
  const int s2 = run_command(base + (dir / "b.csv").string());
  const auto a = slurp(dir / "a.csv");
  const auto b = slurp(dir / "b.csv");
  fs::remove_all(dir);
  const bool ok = s1 == 0 && s2 == 0 && !a.empty() && a == b;
  return {ok, fmt("exit %d/%d, %zu bytes, identical: %s, one run %.1f s", s1, s2, a.size(), a == b ? "yes" : "no", t1)};
}

Outcome property_suite() {
  const std::string cmd = std::string(TAGSHIELD_UNIT_TESTS) + " --test-case='property:*' --minimal";
  const int status = run_command(cmd);
  return {status == 0, fmt("unit_tests --test-case='property:*' exited %d (1000 cases per property)", status)};
}

}  // namespace

int main() {
  report(1, "codec round trip", codec_round_trip);
  report(2, "worked example", worked_example);
  report(3, "key agreement", key_agreement);
  report(4, "transcript bound and safety", transcript_safety);
  report(5, "fixed-bits baseline", fixed_bits_baseline);
  report(6, "quadratic scheme separation", quadratic_separation);
  report(7, "encryption comparison", encryption_comparison);
  report(7, "encryption comparison (fixed pad)", encryption_comparison_fixed_pad);
  report(8, "gaussian threshold", gaussian_threshold);
  report(9, "determinism", cli_determinism);
  report(10, "property suite", property_suite);
  std::printf("%d criterion check(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
