#pragma once

// Group key distribution: a distributor A and participants M_1..M_n agree on
// K = alpha^(N_1 * ... * N_n * N_a) in the order-q subgroup of Z_p^*, p = 2q + 1.
//
//   i)   M_1 -> A: alpha^N_1; then for i = 2..n, A -> M_i the running power and
//        M_i -> A that power raised to N_i.
//   ii)  A -> every M_i: alpha^(N_1...N_n).
//   iii) M_i -> A: the broadcast raised to N_i^-1 (N_i removed from the product).
//   iv)  A -> M_i: the step iii value raised to N_a.
//   v)   M_i raises it to N_i and holds K. Nothing is sent.
//
// Exponents are reduced mod q, elements mod p.

#include "tagshield/bigint.hpp"
#include "tagshield/random.hpp"
#include "tagshield/shared_key.hpp"

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace tagshield {

struct NotInvertible : std::domain_error {
  using std::domain_error::domain_error;
};

/// base^exponent mod modulus by left-to-right square-and-multiply.
BigInt mod_exp(const BigInt& base, const BigInt& exponent, const BigInt& modulus);

/// x with n * x == 1 (mod modulus), by the extended Euclidean algorithm.
BigInt mod_inverse(const BigInt& n, const BigInt& modulus);

/// Probabilistic primality test; error probability below 2^-128.
bool is_probable_prime(const BigInt& n);

struct GroupParams {
  BigInt p;
  BigInt q;
  BigInt alpha;

  /// Throws std::invalid_argument if p != 2q+1, p or q is composite, or alpha
  /// does not generate the order-q subgroup.
  void validate() const;
  bool is_element(const BigInt& x) const;

  std::string to_json() const;
  static GroupParams from_json(const std::string& text);
};

/// Safe-prime group with p of exactly `bits` bits. bits >= 64 for anything
/// beyond toy use; the smallest accepted value is 5 (p = 23).
GroupParams gen_group_params(std::size_t bits, RandomSource& rng);

/// Party identity: index 0 is the distributor A, 1..n are M_1..M_n.
struct PartyId {
  std::size_t index = 0;

  static PartyId distributor() { return {0}; }
  static PartyId participant(std::size_t i) { return {i}; }
  bool is_distributor() const { return index == 0; }

  std::string name() const;
  static PartyId parse(const std::string& name);

  friend auto operator<=>(const PartyId&, const PartyId&) = default;
};

struct PrivateExponent {
  BigInt value;
  PartyId owner;
};

/// Uniform exponent in [1, q-1].
PrivateExponent draw_exponent(const GroupParams& params, PartyId owner, RandomSource& rng);

enum class Step { i, ii, iii, iv, v };

std::string step_name(Step s);
Step parse_step(const std::string& s);

struct Message {
  Step step;
  PartyId from;
  PartyId to;
  BigInt payload;
};

struct Transcript {
  std::vector<Message> messages;

  /// One JSON object per message: {"step", "from", "to", "payload"}.
  std::string to_json_lines(const GroupParams& params) const;
  static Transcript from_json_lines(const std::string& text);
};

struct BusFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// In-memory FIFO bus. Every transmission is appended to the transcript and
/// shown to the tap (the eavesdropper) before delivery.
class MessageBus {
 public:
  using Tap = std::function<void(const Message&)>;

  void set_tap(Tap tap) { tap_ = std::move(tap); }
  /// Makes the (limit+1)-th send throw BusFailure.
  void fail_after(std::size_t limit) { fail_after_ = limit; }

  void send(Message m);
  std::optional<Message> next();

  const Transcript& transcript() const { return transcript_; }

 private:
  std::deque<Message> pending_;
  Transcript transcript_;
  Tap tap_;
  std::optional<std::size_t> fail_after_;
};

/// Distributor state machine.
class Distributor {
 public:
  Distributor(const GroupParams& params, PrivateExponent secret, std::size_t participants);

  std::vector<Message> handle(const Message& m);
  const std::optional<SharedKey>& key() const { return key_; }
  bool done() const { return key_.has_value() && returned_ == participants_; }

 private:
  GroupParams params_;
  PrivateExponent secret_;
  std::size_t participants_;
  std::size_t returned_ = 0;
  std::optional<SharedKey> key_;
};

/// Participant M_i state machine.
class Participant {
 public:
  Participant(const GroupParams& params, PrivateExponent secret);

  /// M_1 opens the protocol; other participants return nothing.
  std::vector<Message> start();
  std::vector<Message> handle(const Message& m);
  const std::optional<SharedKey>& key() const { return key_; }
  bool done() const { return key_.has_value(); }

 private:
  Message reply(Step step, const BigInt& payload) const;

  GroupParams params_;
  PrivateExponent secret_;
  BigInt inverse_;
  std::optional<SharedKey> key_;
};

/// Raised when the bus fails or a party receives something it cannot use.
struct ProtocolAbort : std::runtime_error {
  ProtocolAbort(const std::string& what, Transcript partial)
      : std::runtime_error(what), transcript(std::move(partial)) {}
  Transcript transcript;
};

struct ProtocolRun {
  SharedKey distributor_key;
  std::vector<SharedKey> participant_keys;  // participant_keys[i-1] belongs to M_i
  Transcript transcript;

  bool all_agree() const;
};

/// Runs the protocol on one thread, delivering messages in FIFO order.
/// participant_secrets[i-1] belongs to M_i.
ProtocolRun run_protocol(const GroupParams& params, const std::vector<PrivateExponent>& participant_secrets,
                         const PrivateExponent& distributor_secret, MessageBus& bus);

/// Draws fresh exponents from rng and runs the protocol; secrets are returned
/// through the out-parameters when non-null.
ProtocolRun run_protocol(std::size_t n, const GroupParams& params, MessageBus& bus, RandomSource& rng,
                         std::vector<PrivateExponent>* participant_secrets = nullptr,
                         PrivateExponent* distributor_secret = nullptr);

/// Same protocol with every party on its own thread. Transcript order depends
/// on scheduling; keys do not.
ProtocolRun run_protocol_threaded(const GroupParams& params,
                                  const std::vector<PrivateExponent>& participant_secrets,
                                  const PrivateExponent& distributor_secret);

/// K computed directly from the exponents: alpha^(prod N_i * N_a mod q).
SharedKey reference_key(const GroupParams& params, const std::vector<PrivateExponent>& participant_secrets,
                        const PrivateExponent& distributor_secret);

/// Everything an eavesdropper sees: the set of transmitted payloads.
struct AdversaryView {
  std::set<BigInt> elements;

  bool contains(const BigInt& x) const { return elements.count(x) != 0; }
  std::size_t size() const { return elements.size(); }
};

AdversaryView adversary_view(const Transcript& t);

/// True when `key` is absent from the view.
bool key_hidden(const AdversaryView& view, const SharedKey& key);

struct StepCounts {
  std::size_t i = 0, ii = 0, iii = 0, iv = 0, v = 0;
  std::size_t total() const { return i + ii + iii + iv + v; }
};

StepCounts count_messages(const Transcript& t);

/// alpha raised to the product of every proper subset of `exponents`
/// (empty product included). With the distributor exponent appended, every
/// transcript payload belongs to this set while K does not. Exponential in
/// the number of exponents; limited to 20.
std::set<BigInt> proper_subset_powers(const GroupParams& params, const std::vector<BigInt>& exponents);

/// alpha raised to the product of all exponents.
BigInt full_product_power(const GroupParams& params, const std::vector<BigInt>& exponents);

}  // namespace tagshield
