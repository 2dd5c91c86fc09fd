#include "tagshield/group_keydist.hpp"

#include <json.hpp>

#include <array>
#include <condition_variable>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace tagshield {

BigInt mod_exp(const BigInt& base, const BigInt& exponent, const BigInt& modulus) {
  if (modulus < 2) throw std::domain_error("mod_exp: modulus must be at least 2");
  if (exponent < 0) throw std::domain_error("mod_exp: negative exponent");
  BigInt b = base % modulus;
  if (b < 0) b += modulus;
  BigInt result = 1;
  for (std::size_t i = bit_length(exponent); i-- > 0;) {
    result = result * result % modulus;
    if (mpz_tstbit(exponent.get_mpz_t(), i)) result = result * b % modulus;
  }
  return result;
}

BigInt mod_inverse(const BigInt& n, const BigInt& modulus) {
  if (modulus < 2) throw NotInvertible("mod_inverse: modulus must be at least 2");
  BigInt a = n % modulus;
  if (a < 0) a += modulus;
  BigInt r0 = modulus, r1 = a;
  BigInt s0 = 0, s1 = 1;
  while (r1 != 0) {
    BigInt quotient = r0 / r1;
    BigInt r2 = r0 - quotient * r1;
    BigInt s2 = s0 - quotient * s1;
    r0 = std::move(r1);
    r1 = std::move(r2);
    s0 = std::move(s1);
    s1 = std::move(s2);
  }
  if (r0 != 1) throw NotInvertible("mod_inverse: argument shares a factor with the modulus");
  BigInt inv = s0 % modulus;
  if (inv < 0) inv += modulus;
  return inv;
}

bool is_probable_prime(const BigInt& n) {
  // Baillie-PSW (Miller-Rabin base 2 + strong Lucas) followed by 40 random
  // Miller-Rabin rounds.
  return mpz_probab_prime_p(n.get_mpz_t(), 64) != 0;
}

void GroupParams::validate() const {
  if (p != 2 * q + 1) throw std::invalid_argument("group: p != 2q + 1");
  if (q < 3 || !is_probable_prime(q)) throw std::invalid_argument("group: q is not an odd prime");
  if (!is_probable_prime(p)) throw std::invalid_argument("group: p is not prime");
  if (alpha <= 1 || alpha >= p) throw std::invalid_argument("group: alpha out of range");
  if (mod_exp(alpha, q, p) != 1) throw std::invalid_argument("group: alpha is not in the order-q subgroup");
}

bool GroupParams::is_element(const BigInt& x) const {
  return x > 0 && x < p && mod_exp(x, q, p) == 1;
}

std::string GroupParams::to_json() const {
  nlohmann::ordered_json j;
  j["p"] = to_hex(p);
  j["q"] = to_hex(q);
  j["alpha"] = to_hex(alpha);
  return j.dump();
}

GroupParams GroupParams::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("malformed group parameters: ") + e.what());
  }
  for (const char* field : {"p", "q", "alpha"}) {
    if (!j.contains(field) || !j[field].is_string()) {
      throw std::invalid_argument(std::string("malformed group parameters: missing ") + field);
    }
  }
  GroupParams g{from_hex(j["p"].get<std::string>()), from_hex(j["q"].get<std::string>()),
                from_hex(j["alpha"].get<std::string>())};
  g.validate();
  return g;
}

namespace {

constexpr std::array<unsigned, 167> kSmallPrimes = [] {
  std::array<unsigned, 167> primes{};
  std::size_t count = 0;
  for (unsigned c = 3; count < primes.size(); c += 2) {
    bool prime = true;
    for (unsigned d = 3; d * d <= c; d += 2) {
      if (c % d == 0) {
        prime = false;
        break;
      }
    }
    if (prime) primes[count++] = c;
  }
  return primes;
}();

// Rejects candidates where q or 2q+1 has a small odd factor. Only valid when
// both exceed the largest sieving prime.
bool passes_sieve(const BigInt& q) {
  for (unsigned s : kSmallPrimes) {
    unsigned long r = mpz_fdiv_ui(q.get_mpz_t(), s);
    if (r == 0 || (2 * r + 1) % s == 0) return false;
  }
  return true;
}

}  // namespace

GroupParams gen_group_params(std::size_t bits, RandomSource& rng) {
  if (bits < 5) throw std::invalid_argument("group size must be at least 5 bits");
  const std::size_t q_bits = bits - 1;
  const bool sieve = q_bits > 12;
  BigInt q;
  for (;;) {
    q = random_bits(rng, q_bits);
    mpz_setbit(q.get_mpz_t(), q_bits - 1);
    mpz_setbit(q.get_mpz_t(), 0);
    if (sieve && !passes_sieve(q)) continue;
    if (mpz_probab_prime_p(q.get_mpz_t(), 1) == 0) continue;
    BigInt p = 2 * q + 1;
    if (mpz_probab_prime_p(p.get_mpz_t(), 1) == 0) continue;
    if (is_probable_prime(q) && is_probable_prime(p)) break;
  }
  GroupParams g{2 * q + 1, q, 0};
  // Squares of non-trivial elements generate the order-q subgroup.
  for (;;) {
    BigInt h = uniform_in(rng, 2, g.p - 2);
    g.alpha = h * h % g.p;
    if (g.alpha != 1 && g.alpha != g.p - 1) break;
  }
  return g;
}

std::string PartyId::name() const {
  return is_distributor() ? std::string("A") : "M" + std::to_string(index);
}

PartyId PartyId::parse(const std::string& name) {
  if (name == "A") return distributor();
  if (name.size() >= 2 && name[0] == 'M') {
    std::size_t pos = 0;
    unsigned long i = std::stoul(name.substr(1), &pos);
    if (pos == name.size() - 1 && i >= 1) return participant(i);
  }
  throw std::invalid_argument("unknown party name: " + name);
}

PrivateExponent draw_exponent(const GroupParams& params, PartyId owner, RandomSource& rng) {
  return PrivateExponent{uniform_in(rng, 1, params.q - 1), owner};
}

std::string step_name(Step s) {
  switch (s) {
    case Step::i: return "i";
    case Step::ii: return "ii";
    case Step::iii: return "iii";
    case Step::iv: return "iv";
    case Step::v: return "v";
  }
  return "?";
}

Step parse_step(const std::string& s) {
  if (s == "i") return Step::i;
  if (s == "ii") return Step::ii;
  if (s == "iii") return Step::iii;
  if (s == "iv") return Step::iv;
  if (s == "v") return Step::v;
  throw std::invalid_argument("unknown protocol step: " + s);
}

std::string Transcript::to_json_lines(const GroupParams& params) const {
  const std::size_t width = bytes_for_bits(bit_length(params.p));
  std::string out;
  for (const auto& m : messages) {
    nlohmann::ordered_json j;
    j["step"] = step_name(m.step);
    j["from"] = m.from.name();
    j["to"] = m.to.name();
    j["payload"] = to_hex(m.payload, width);
    out += j.dump();
    out += '\n';
  }
  return out;
}

Transcript Transcript::from_json_lines(const std::string& text) {
  Transcript t;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto j = nlohmann::json::parse(line);
    t.messages.push_back(Message{parse_step(j.at("step").get<std::string>()),
                                 PartyId::parse(j.at("from").get<std::string>()),
                                 PartyId::parse(j.at("to").get<std::string>()),
                                 from_hex(j.at("payload").get<std::string>())});
  }
  return t;
}

void MessageBus::send(Message m) {
  if (fail_after_ && transcript_.messages.size() >= *fail_after_) {
    throw BusFailure("bus failed after " + std::to_string(*fail_after_) + " transmissions");
  }
  transcript_.messages.push_back(m);
  if (tap_) tap_(transcript_.messages.back());
  pending_.push_back(std::move(m));
}

std::optional<Message> MessageBus::next() {
  if (pending_.empty()) return std::nullopt;
  Message m = std::move(pending_.front());
  pending_.pop_front();
  return m;
}

Distributor::Distributor(const GroupParams& params, PrivateExponent secret, std::size_t participants)
    : params_(params), secret_(std::move(secret)), participants_(participants) {}

std::vector<Message> Distributor::handle(const Message& m) {
  if (!params_.is_element(m.payload)) throw std::runtime_error("distributor received a non-group element");
  if (m.from.is_distributor() || m.from.index > participants_) {
    throw std::runtime_error("distributor received a message from an unknown party");
  }
  std::vector<Message> out;
  switch (m.step) {
    case Step::i:
      if (m.from.index < participants_) {
        out.push_back({Step::i, PartyId::distributor(), PartyId::participant(m.from.index + 1), m.payload});
      } else {
        key_ = SharedKey{mod_exp(m.payload, secret_.value, params_.p)};
        for (std::size_t i = 1; i <= participants_; ++i) {
          out.push_back({Step::ii, PartyId::distributor(), PartyId::participant(i), m.payload});
        }
      }
      break;
    case Step::iii:
      out.push_back({Step::iv, PartyId::distributor(), m.from, mod_exp(m.payload, secret_.value, params_.p)});
      ++returned_;
      break;
    default:
      throw std::runtime_error("distributor received unexpected step " + step_name(m.step));
  }
  return out;
}

Participant::Participant(const GroupParams& params, PrivateExponent secret)
    : params_(params), secret_(std::move(secret)), inverse_(mod_inverse(secret_.value, params_.q)) {}

Message Participant::reply(Step step, const BigInt& payload) const {
  return Message{step, secret_.owner, PartyId::distributor(), payload};
}

std::vector<Message> Participant::start() {
  if (secret_.owner.index != 1) return {};
  return {reply(Step::i, mod_exp(params_.alpha, secret_.value, params_.p))};
}

std::vector<Message> Participant::handle(const Message& m) {
  if (!params_.is_element(m.payload)) throw std::runtime_error("participant received a non-group element");
  switch (m.step) {
    case Step::i:
      return {reply(Step::i, mod_exp(m.payload, secret_.value, params_.p))};
    case Step::ii:
      return {reply(Step::iii, mod_exp(m.payload, inverse_, params_.p))};
    case Step::iv:
      key_ = SharedKey{mod_exp(m.payload, secret_.value, params_.p)};
      return {};
    default:
      throw std::runtime_error("participant received unexpected step " + step_name(m.step));
  }
}

bool ProtocolRun::all_agree() const {
  for (const auto& k : participant_keys) {
    if (!(k == distributor_key)) return false;
  }
  return true;
}

namespace {

void check_secrets(const GroupParams& params, const std::vector<PrivateExponent>& participant_secrets,
                   const PrivateExponent& distributor_secret) {
  if (participant_secrets.empty()) throw std::invalid_argument("protocol needs at least one participant");
  auto in_range = [&](const BigInt& n) { return n >= 1 && n < params.q; };
  if (!in_range(distributor_secret.value)) throw std::invalid_argument("distributor exponent outside [1, q)");
  for (const auto& s : participant_secrets) {
    if (!in_range(s.value)) throw std::invalid_argument("participant exponent outside [1, q)");
  }
}

}  // namespace

ProtocolRun run_protocol(const GroupParams& params, const std::vector<PrivateExponent>& participant_secrets,
                         const PrivateExponent& distributor_secret, MessageBus& bus) {
  check_secrets(params, participant_secrets, distributor_secret);
  const std::size_t n = participant_secrets.size();

  Distributor distributor(params, PrivateExponent{distributor_secret.value, PartyId::distributor()}, n);
  std::vector<Participant> participants;
  participants.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    participants.emplace_back(params, PrivateExponent{participant_secrets[i].value, PartyId::participant(i + 1)});
  }

  try {
    for (auto& m : participants.front().start()) bus.send(std::move(m));
    while (auto m = bus.next()) {
      auto replies = m->to.is_distributor() ? distributor.handle(*m) : participants.at(m->to.index - 1).handle(*m);
      for (auto& r : replies) bus.send(std::move(r));
    }
  } catch (const std::exception& e) {
    throw ProtocolAbort(e.what(), bus.transcript());
  }

  if (!distributor.done()) throw ProtocolAbort("distributor did not finish", bus.transcript());
  ProtocolRun run{*distributor.key(), {}, bus.transcript()};
  for (const auto& p : participants) {
    if (!p.done()) throw ProtocolAbort("participant did not obtain a key", bus.transcript());
    run.participant_keys.push_back(*p.key());
  }
  return run;
}

ProtocolRun run_protocol(std::size_t n, const GroupParams& params, MessageBus& bus, RandomSource& rng,
                         std::vector<PrivateExponent>* participant_secrets, PrivateExponent* distributor_secret) {
  std::vector<PrivateExponent> secrets;
  for (std::size_t i = 1; i <= n; ++i) secrets.push_back(draw_exponent(params, PartyId::participant(i), rng));
  auto own = draw_exponent(params, PartyId::distributor(), rng);
  if (participant_secrets) *participant_secrets = secrets;
  if (distributor_secret) *distributor_secret = own;
  return run_protocol(params, secrets, own, bus);
}

namespace {

// Per-party inboxes guarded by one mutex; the transcript records sends in the
// order the mutex serializes them.
class ThreadedBus {
 public:
  explicit ThreadedBus(std::size_t parties) : inboxes_(parties) {}

  void send(Message m) {
    std::lock_guard lock(mu_);
    transcript_.messages.push_back(m);
    inboxes_.at(m.to.index).push_back(std::move(m));
    cv_.notify_all();
  }

  std::optional<Message> receive(std::size_t party) {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return aborted_ || !inboxes_[party].empty(); });
    if (aborted_) return std::nullopt;
    Message m = std::move(inboxes_[party].front());
    inboxes_[party].pop_front();
    return m;
  }

  void abort(std::string reason) {
    std::lock_guard lock(mu_);
    if (!aborted_) reason_ = std::move(reason);
    aborted_ = true;
    cv_.notify_all();
  }

  bool aborted() const {
    std::lock_guard lock(mu_);
    return aborted_;
  }
  std::string reason() const {
    std::lock_guard lock(mu_);
    return reason_;
  }
  Transcript transcript() const {
    std::lock_guard lock(mu_);
    return transcript_;
  }

 private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::vector<std::deque<Message>> inboxes_;
  Transcript transcript_;
  bool aborted_ = false;
  std::string reason_;
};

}  // namespace

ProtocolRun run_protocol_threaded(const GroupParams& params,
                                  const std::vector<PrivateExponent>& participant_secrets,
                                  const PrivateExponent& distributor_secret) {
  check_secrets(params, participant_secrets, distributor_secret);
  const std::size_t n = participant_secrets.size();
  ThreadedBus bus(n + 1);

  Distributor distributor(params, PrivateExponent{distributor_secret.value, PartyId::distributor()}, n);
  std::vector<Participant> participants;
  participants.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    participants.emplace_back(params, PrivateExponent{participant_secrets[i].value, PartyId::participant(i + 1)});
  }

  auto drive = [&bus](std::size_t index, auto& party) {
    try {
      if constexpr (requires { party.start(); }) {
        for (auto& m : party.start()) bus.send(std::move(m));
      }
      while (!party.done()) {
        auto m = bus.receive(index);
        if (!m) return;
        for (auto& r : party.handle(*m)) bus.send(std::move(r));
      }
    } catch (const std::exception& e) {
      bus.abort(e.what());
    }
  };

  {
    std::vector<std::jthread> threads;
    threads.emplace_back([&] { drive(0, distributor); });
    for (std::size_t i = 0; i < n; ++i) threads.emplace_back([&, i] { drive(i + 1, participants[i]); });
  }

  if (bus.aborted()) throw ProtocolAbort(bus.reason(), bus.transcript());
  ProtocolRun run{*distributor.key(), {}, bus.transcript()};
  for (const auto& p : participants) run.participant_keys.push_back(*p.key());
  return run;
}

SharedKey reference_key(const GroupParams& params, const std::vector<PrivateExponent>& participant_secrets,
                        const PrivateExponent& distributor_secret) {
  BigInt e = distributor_secret.value % params.q;
  for (const auto& s : participant_secrets) e = e * s.value % params.q;
  return SharedKey{mod_exp(params.alpha, e, params.p)};
}

AdversaryView adversary_view(const Transcript& t) {
  AdversaryView v;
  for (const auto& m : t.messages) v.elements.insert(m.payload);
  return v;
}

bool key_hidden(const AdversaryView& view, const SharedKey& key) { return !view.contains(key.value); }

StepCounts count_messages(const Transcript& t) {
  StepCounts c;
  for (const auto& m : t.messages) {
    switch (m.step) {
      case Step::i: ++c.i; break;
      case Step::ii: ++c.ii; break;
      case Step::iii: ++c.iii; break;
      case Step::iv: ++c.iv; break;
      case Step::v: ++c.v; break;
    }
  }
  return c;
}

std::set<BigInt> proper_subset_powers(const GroupParams& params, const std::vector<BigInt>& exponents) {
  if (exponents.size() > 20) throw std::invalid_argument("proper_subset_powers: too many exponents");
  const std::uint32_t full = (1u << exponents.size()) - 1;
  std::set<BigInt> out;
  for (std::uint32_t mask = 0; mask < full; ++mask) {
    BigInt e = 1;
    for (std::size_t j = 0; j < exponents.size(); ++j) {
      if (mask & (1u << j)) e = e * exponents[j] % params.q;
    }
    out.insert(mod_exp(params.alpha, e, params.p));
  }
  return out;
}

BigInt full_product_power(const GroupParams& params, const std::vector<BigInt>& exponents) {
  BigInt e = 1;
  for (const auto& x : exponents) e = e * x % params.q;
  return mod_exp(params.alpha, e, params.p);
}

}  // namespace tagshield
