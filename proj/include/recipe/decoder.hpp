#pragma once

#include "recipe/protocol.hpp"

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <variant>
#include <vector>

namespace recipe {

struct RecipeDScheme {
  std::shared_ptr<const Apa> apa;
};

struct RecipeTScheme {
  std::shared_ptr<const Avst> avst;
  // When set, the decoder refuses an AVST built from a different APA.
  std::optional<std::uint64_t> expected_apa_digest;
};

// How a binomial-branch packet with an empty codeword is accounted.
enum class PintZeroPolicy {
  EmitAndDiscard, // delivered, counted as received, carries nothing
  Condition,      // never delivered (the XDD conditioned on d >= 1)
};

struct PintScheme {
  PintParams params;
  PintZeroPolicy zero_policy = PintZeroPolicy::EmitAndDiscard;
};

using Scheme = std::variant<RecipeDScheme, RecipeTScheme, PintScheme>;

// Largest path length a scheme can encode (unbounded for PINT).
std::size_t scheme_diameter(const Scheme &scheme);

// Pushes one packet through switches 1..ids.size().
Packet encode_path(std::uint64_t packet_id, std::span<const SwitchId> ids,
                   const Scheme &scheme, const GlobalHash &gh);

/// Recomputes, from the packet id alone, which hops' IDs are XOR-ed into
/// the codeword delivered over a path of length k. Output is ascending.
void replay_xor_set(std::uint64_t packet_id, std::size_t k, const Scheme &scheme,
                    const GlobalHash &gh, std::vector<std::uint32_t> &out);
std::vector<std::uint32_t> replay_xor_set(std::uint64_t packet_id, std::size_t k,
                                          const Scheme &scheme, const GlobalHash &gh);

struct ReceivedCodeword {
  std::uint64_t packet_id = 0;
  std::size_t path_length = 0;
  Word codeword = 0;
  std::vector<std::uint32_t> xor_set; // hop indices, 1-based
};

/// Incremental peeling decoder for one coding instance.
class PeelingState {
public:
  explicit PeelingState(std::size_t k);

  std::size_t k() const { return k_; }
  std::size_t resolved_count() const { return resolved_count_; }
  bool complete() const { return resolved_count_ == k_; }
  const std::optional<Word> &resolved(std::size_t hop) const { return resolved_[hop]; }
  std::map<std::uint32_t, SwitchId> ids() const;
  std::size_t pending_count() const;

  // Inserts a codeword, cascades, and returns the hops resolved by it.
  std::vector<std::uint32_t> insert(const ReceivedCodeword &cw);
  std::vector<std::uint32_t> insert(std::span<const std::uint32_t> xor_set, Word value);

  struct PendingView {
    Word value;
    std::vector<std::uint32_t> unresolved;
  };
  // Pending codewords with their unresolved members (for inspection).
  std::vector<PendingView> pending() const;

private:
  struct Pending {
    Word value;
    std::uint32_t remaining;
    std::uint32_t hop_xor; // XOR of the unresolved hop indices
    bool done;
    std::vector<std::uint32_t> hops;
  };

  void resolve(std::uint32_t hop, Word value, std::vector<std::uint32_t> &newly);

  std::size_t k_;
  std::size_t resolved_count_ = 0;
  std::vector<std::optional<Word>> resolved_; // index 0 unused
  std::vector<Pending> pending_;
  std::vector<std::vector<std::uint32_t>> by_hop_;
  std::vector<std::uint32_t> queue_;
};

struct DecodeResult {
  std::map<std::uint32_t, SwitchId> ids;
  std::size_t used = 0;
  bool complete = false;
};

// Feeds codewords in order until every hop is resolved or input runs out.
DecodeResult decode_stream(std::span<const ReceivedCodeword> codewords, std::size_t k);

} // namespace recipe
