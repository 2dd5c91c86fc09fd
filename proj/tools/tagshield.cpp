// tagshield: group setup, key exchange simulation, tag sealing and correlation
// experiments from the command line.
//
// Exit codes: 0 success, 1 usage or input error, 2 internal invariant violation.

#include "tagshield/correlation_lab.hpp"
#include "tagshield/group_keydist.hpp"
#include "tagshield/otp_cipher.hpp"
#include "tagshield/triangular_codec.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace tagshield;

constexpr int kExitInput = 1;
constexpr int kExitInvariant = 2;

struct InvariantViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::unique_ptr<RandomSource> make_rng(const std::optional<std::uint64_t>& seed) {
  if (seed) return std::make_unique<SeededRandom>(*seed);
  return std::make_unique<SystemRandom>();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

void write_output(const std::string& path, const std::string& data) {
  if (path.empty() || path == "-") {
    std::cout << data;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::invalid_argument("cannot write " + path);
  out << data;
  if (!out) throw std::invalid_argument("write failed: " + path);
}

SharedKey read_key_file(const std::string& path) { return SharedKey::from_hex(trim(read_file(path))); }

struct GroupGenOptions {
  std::size_t bits = 2048;
  std::string out;
};

void cmd_group_gen(const GroupGenOptions& o, RandomSource& rng) {
  auto g = gen_group_params(o.bits, rng);
  write_output(o.out, g.to_json() + "\n");
  std::cerr << "p: " << bit_length(g.p) << " bits, q: " << bit_length(g.q)
            << " bits, alpha: " << bit_length(g.alpha) << " bits\n";
}

struct ExchangeOptions {
  std::size_t n = 3;
  std::string params;
  std::string out;
  std::string transcript;
  bool threaded = false;
};

void cmd_exchange(const ExchangeOptions& o, RandomSource& rng) {
  auto params = GroupParams::from_json(read_file(o.params));
  if (o.n == 0) throw std::invalid_argument("--n must be at least 1");

  std::vector<PrivateExponent> secrets;
  PrivateExponent own;
  ProtocolRun run;
  if (o.threaded) {
    for (std::size_t i = 1; i <= o.n; ++i) secrets.push_back(draw_exponent(params, PartyId::participant(i), rng));
    own = draw_exponent(params, PartyId::distributor(), rng);
    run = run_protocol_threaded(params, secrets, own);
  } else {
    MessageBus bus;
    run = run_protocol(o.n, params, bus, rng, &secrets, &own);
  }

  if (!run.all_agree()) throw InvariantViolation("parties derived different keys");
  if (!(run.distributor_key == reference_key(params, secrets, own))) {
    throw InvariantViolation("agreed key differs from the direct computation");
  }
  if (!key_hidden(adversary_view(run.transcript), run.distributor_key)) {
    throw InvariantViolation("shared key was transmitted");
  }
  auto counts = count_messages(run.transcript);
  if (counts.total() > 5 * o.n) throw InvariantViolation("transcript exceeds 5n transmissions");

  write_output(o.out, run.distributor_key.to_hex() + "\n");
  if (!o.transcript.empty()) write_output(o.transcript, run.transcript.to_json_lines(params));
  std::cerr << "parties: " << o.n + 1 << ", transmissions: " << counts.total() << " (i " << counts.i << ", ii "
            << counts.ii << ", iii " << counts.iii << ", iv " << counts.iv << ")\n";
}

struct SealOptions {
  std::string tag;
  std::size_t tag_bits = 0;
  std::size_t budget = 0;
  std::string key;
  std::string manifest;
  std::string out;
};

void cmd_seal(const SealOptions& o, RandomSource& rng) {
  BigInt value;
  if (value.set_str(o.tag, 10) != 0 || value < 0) throw std::invalid_argument("--tag must be a non-negative integer");
  HiddenTag tag(value, o.tag_bits);
  auto record = seal_tag(tag, o.budget, read_key_file(o.key), o.manifest, rng);
  write_output(o.out, record.to_json_line() + "\n");
}

struct OpenOptions {
  std::string record;
  std::string key;
};

void cmd_open(const OpenOptions& o) {
  std::string text;
  if (o.record == "-") {
    std::ostringstream ss;
    ss << std::cin.rdbuf();
    text = ss.str();
  } else {
    text = read_file(o.record);
  }
  text = trim(text);
  if (text.find('\n') != std::string::npos) throw std::invalid_argument("expected exactly one record");
  auto record = TagRecord::from_json_line(text);
  std::cout << open_tag(record, read_key_file(o.key)).get_str() << "\n";
}

struct CurveOptions {
  std::vector<std::size_t> b_list;
  std::vector<std::size_t> ratio_list{2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::size_t samples = 0;
  std::size_t seeds = 0;
  bool quick = false;
  bool encrypted = false;
  std::string pad_mode = "fresh";
  std::vector<std::string> schemes{"quadratic", "fixed-bits"};
  unsigned threads = 0;
  std::string out;
};

void cmd_attack_curve(const CurveOptions& o, std::uint64_t base_seed) {
  CurveConfig c;
  c.b_list = o.b_list.empty() ? (o.quick ? std::vector<std::size_t>{10, 30} : c.b_list) : o.b_list;
  c.ratio_list = o.ratio_list;
  c.samples = o.samples ? o.samples : (o.quick ? 2000 : 10000);
  c.schemes.clear();
  for (const auto& s : o.schemes) c.schemes.push_back(parse_scheme(s));
  c.encrypted_modes = o.encrypted ? std::vector<bool>{false, true} : std::vector<bool>{false};
  c.pad_mode = parse_pad_mode(o.pad_mode);
  const std::size_t seeds = o.seeds ? o.seeds : (o.quick ? 5 : 20);
  for (std::size_t i = 0; i < seeds; ++i) c.seeds.push_back(base_seed + i);
  c.threads = o.threads;
  write_output(o.out, run_curve_experiment(c).to_csv());
}

struct GaussianOptions {
  double rho = 0.9;
  double sigma_m = 1.0;
  double sigma_h = 0.0;
  double beta = 1.0;
  std::size_t trials = 1000000;
  std::string out;
};

void cmd_gaussian_demo(const GaussianOptions& o, RandomSource& rng) {
  auto r = gaussian_threshold_demo(o.rho, o.sigma_m, o.sigma_h, o.beta, o.trials, rng);
  write_output(o.out, r.to_json() + "\n");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Correlation-resistant tag encryption toolkit"};
  app.require_subcommand(1);

  std::optional<std::uint64_t> seed;
  app.add_option("--seed", seed, "Seed for a fully deterministic run")->expected(1);

  GroupGenOptions gg;
  auto* group_gen = app.add_subcommand("group-gen", "Generate safe-prime group parameters");
  group_gen->add_option("--bits", gg.bits, "Bit length of p")->check(CLI::Range(5, 1 << 16));
  group_gen->add_option("--out", gg.out, "Output file (default stdout)");

  ExchangeOptions ex;
  auto* exchange = app.add_subcommand("exchange", "Simulate the group key distribution");
  exchange->add_option("--n", ex.n, "Number of participants")->check(CLI::Range(1, 1 << 20));
  exchange->add_option("--params", ex.params, "Group parameter file")->required();
  exchange->add_option("--out", ex.out, "Key file (default stdout)");
  exchange->add_option("--transcript", ex.transcript, "Transcript output (JSON lines)");
  exchange->add_flag("--threaded", ex.threaded, "Run every party on its own thread");

  SealOptions se;
  auto* seal = app.add_subcommand("seal", "Encode and encipher a tag");
  seal->add_option("--tag", se.tag, "Tag value (decimal)")->required();
  seal->add_option("--tag-bits", se.tag_bits, "Declared tag width b")->required();
  seal->add_option("--budget", se.budget, "Code width B (>= 2b)")->required();
  seal->add_option("--key", se.key, "Key file written by exchange")->required();
  seal->add_option("--manifest", se.manifest, "Manifest identifier")->required();
  seal->add_option("--out", se.out, "Output file (default stdout)");

  OpenOptions op;
  auto* open = app.add_subcommand("open", "Recover a tag from a sealed record");
  open->add_option("--record", op.record, "Record file, or - for stdin")->required();
  open->add_option("--key", op.key, "Key file")->required();

  CurveOptions cu;
  auto* curve = app.add_subcommand("attack-curve", "Correlation of tags against codes or ciphers");
  curve->add_option("--b-list", cu.b_list, "Tag widths")->delimiter(',');
  curve->add_option("--ratio-list", cu.ratio_list, "Values of B/b")->delimiter(',');
  curve->add_option("--samples", cu.samples, "Samples T per cell");
  curve->add_option("--seeds", cu.seeds, "Seeds per cell (seed, seed+1, ...)");
  curve->add_option("--schemes", cu.schemes, "quadratic and/or fixed-bits")->delimiter(',');
  curve->add_flag("--quick", cu.quick, "T=2000, b in {10,30}, 5 seeds");
  curve->add_flag("--encrypted", cu.encrypted, "Add rows for enciphered codes");
  curve->add_option("--pad-mode", cu.pad_mode, "fresh or fixed")->check(CLI::IsMember({"fresh", "fixed"}));
  curve->add_option("--threads", cu.threads, "Worker threads (0: all cores)");
  curve->add_option("--out", cu.out, "CSV output (default stdout)");

  GaussianOptions ga;
  auto* gauss = app.add_subcommand("gaussian-demo", "Monte Carlo of the Gaussian correlation attack");
  gauss->add_option("--rho", ga.rho, "Correlation between manifest and tag");
  gauss->add_option("--sigma-m", ga.sigma_m, "Manifest measurement deviation");
  gauss->add_option("--sigma-h", ga.sigma_h, "Tag measurement deviation");
  gauss->add_option("--beta", ga.beta, "Slope of m = beta*h");
  gauss->add_option("--trials", ga.trials, "Monte Carlo trials");
  gauss->add_option("--out", ga.out, "JSON output (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    if (*group_gen) {
      cmd_group_gen(gg, *make_rng(seed));
    } else if (*exchange) {
      cmd_exchange(ex, *make_rng(seed));
    } else if (*seal) {
      cmd_seal(se, *make_rng(seed));
    } else if (*open) {
      cmd_open(op);
    } else if (*curve) {
      std::uint64_t base = seed ? *seed : SystemRandom().next_u64();
      if (!seed) std::cerr << "seed: " << base << "\n";
      cmd_attack_curve(cu, base);
    } else if (*gauss) {
      cmd_gaussian_demo(ga, *make_rng(seed));
    }
  } catch (const InvariantViolation& e) {
    std::cerr << "invariant violated: " << e.what() << "\n";
    return kExitInvariant;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return 0;
}
