#pragma once

#include "recipe/distributions.hpp"
#include "recipe/feasibility.hpp"
#include "recipe/hash.hpp"

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace recipe {

// On-disk codes of the AVST format; 3 is reserved.
enum class Action : std::uint8_t { Skip = 0, Add = 1, Replace = 2 };

const char *to_string(Action a);

using Word = std::uint64_t;

/// A switch ID; the all-zero word is reserved for the empty codeword.
class SwitchId {
public:
  explicit SwitchId(Word value);
  Word value() const { return value_; }
  bool operator==(const SwitchId &) const = default;

private:
  Word value_;
};

struct Packet {
  std::uint64_t packet_id = 0;
  std::uint32_t hop_count = 0;
  Word codeword = 0;
  // XOR degree; carried only by RECIPE-d.
  std::uint32_t degree = 0;
};

// Bits the degree field needs for diameter K: 6, or ceil(log2(K+1)) past 63.
unsigned degree_field_bits(std::size_t K);

// Action RECIPE-d takes for coin nu at an entry: Add on [0, pA),
// Replace on [pA, pA + pR), Skip otherwise.
Action choose_action(const ActionProbs &p, double nu);

// Applies an action in place; returns the new XOR degree.
std::uint32_t apply_action(Action a, Word &codeword, std::uint32_t degree, SwitchId id);

Packet step_recipe_d(const Packet &pkt, SwitchId my_id, const Apa &apa,
                     const GlobalHash &gh);

/// Action vector sample table: L independent RECIPE-d action vectors down
/// a length-K path.
class Avst {
public:
  Avst(std::size_t K, std::size_t L, std::uint64_t seed, std::uint64_t apa_digest,
       std::vector<Action> actions);

  std::size_t K() const { return K_; }
  std::size_t L() const { return L_; }
  std::uint64_t seed() const { return seed_; }
  std::uint64_t apa_digest() const { return apa_digest_; }

  // row in [0, L), hop in 1..K.
  Action action(std::size_t row, std::size_t hop) const {
    return actions_[row * K_ + (hop - 1)];
  }

  void write(std::ostream &out) const;
  static Avst read(std::istream &in);

  bool operator==(const Avst &) const = default;

private:
  std::size_t K_;
  std::size_t L_;
  std::uint64_t seed_;
  std::uint64_t apa_digest_;
  std::vector<Action> actions_; // row-major
};

Avst generate_avst(const Apa &apa, std::size_t L, std::uint64_t seed);

Packet step_recipe_t(const Packet &pkt, SwitchId my_id, const Avst &avst,
                     const GlobalHash &gh);

// PINT baseline switch. A per-packet branch coin picks reservoir sampling
// (probability alpha: replace with probability 1/i) or the binomial code
// (XOR with probability p). A binomial packet may arrive empty.
Packet step_pint(const Packet &pkt, SwitchId my_id, const PintParams &params,
                 const GlobalHash &gh);

// True when the packet takes the reservoir-sampling branch.
bool pint_reservoir_branch(const PintParams &params, const GlobalHash &gh,
                           std::uint64_t packet_id);

} // namespace recipe
