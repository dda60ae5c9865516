#include "recipe/protocol.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <istream>
#include <ostream>
#include <random>

namespace recipe {

const char *to_string(Action a) {
  switch (a) {
  case Action::Skip:
    return "Skip";
  case Action::Add:
    return "Add";
  case Action::Replace:
    return "Replace";
  }
  return "?";
}

SwitchId::SwitchId(Word value) : value_(value) {
  if (value == 0)
    throw RangeError("switch ID must be nonzero");
}

unsigned degree_field_bits(std::size_t K) {
  const auto needed = static_cast<unsigned>(std::bit_width(K));
  return std::max(6u, needed);
}

std::size_t row_select(const GlobalHash &gh, std::uint64_t packet_id, std::size_t L) {
  if (L == 0)
    throw RangeError("row_select: L must be >= 1");
  const double u = gh.row_hash().uniform(0, packet_id);
  return std::min(static_cast<std::size_t>(u * static_cast<double>(L)), L - 1);
}

Action choose_action(const ActionProbs &p, double nu) {
  if (nu < p.add)
    return Action::Add;
  if (nu < p.add + p.replace)
    return Action::Replace;
  return Action::Skip;
}

std::uint32_t apply_action(Action a, Word &codeword, std::uint32_t degree, SwitchId id) {
  switch (a) {
  case Action::Add:
    codeword ^= id.value();
    return degree + 1;
  case Action::Replace:
    codeword = id.value();
    return 1;
  case Action::Skip:
    break;
  }
  return degree;
}

Packet step_recipe_d(const Packet &pkt, SwitchId my_id, const Apa &apa,
                     const GlobalHash &gh) {
  const std::size_t i = pkt.hop_count + 1;
  if (i > apa.K())
    throw RangeError("hop " + std::to_string(i) + " beyond diameter " +
                     std::to_string(apa.K()));
  Packet out = pkt;
  const double nu = gh.uniform(i, pkt.packet_id);
  const Action a = choose_action(apa.at(i, pkt.degree), nu);
  out.degree = apply_action(a, out.codeword, pkt.degree, my_id);
  out.hop_count = static_cast<std::uint32_t>(i);
  return out;
}

Avst::Avst(std::size_t K, std::size_t L, std::uint64_t seed, std::uint64_t apa_digest,
           std::vector<Action> actions)
    : K_(K), L_(L), seed_(seed), apa_digest_(apa_digest), actions_(std::move(actions)) {
  if (K_ < 1 || L_ < 1)
    throw ValidationError("AVST needs K >= 1 and L >= 1");
  if (actions_.size() != K_ * L_)
    throw ValidationError("AVST action count does not match K*L");
  for (std::size_t l = 0; l < L_; ++l)
    if (action(l, 1) != Action::Replace)
      throw ValidationError("AVST row " + std::to_string(l) + " does not start with Replace");
}

namespace {

constexpr std::array<char, 4> kMagic{'A', 'V', 'S', 'T'};
constexpr std::uint32_t kVersion = 1;

template <typename T> void put_le(std::ostream &out, T v) {
  std::array<char, sizeof(T)> buf{};
  for (std::size_t b = 0; b < sizeof(T); ++b)
    buf[b] = static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * b)) & 0xFF);
  out.write(buf.data(), buf.size());
}

template <typename T> T get_le(std::istream &in) {
  std::array<char, sizeof(T)> buf{};
  if (!in.read(buf.data(), buf.size()))
    throw ValidationError("truncated AVST header");
  std::uint64_t v = 0;
  for (std::size_t b = 0; b < sizeof(T); ++b)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[b])) << (8 * b);
  return static_cast<T>(v);
}

} // namespace

void Avst::write(std::ostream &out) const {
  out.write(kMagic.data(), kMagic.size());
  put_le<std::uint32_t>(out, kVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(K_));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(L_));
  put_le<std::uint64_t>(out, seed_);
  put_le<std::uint64_t>(out, apa_digest_);
  // 2 bits per action, row-major, first action in the low bits.
  std::vector<char> packed((actions_.size() + 3) / 4, 0);
  for (std::size_t n = 0; n < actions_.size(); ++n)
    packed[n / 4] = static_cast<char>(static_cast<unsigned char>(packed[n / 4]) |
                                      (static_cast<unsigned>(actions_[n]) << (2 * (n % 4))));
  out.write(packed.data(), static_cast<std::streamsize>(packed.size()));
  if (!out)
    throw Error("failed writing AVST");
}

Avst Avst::read(std::istream &in) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic)
    throw ValidationError("not an AVST file (bad magic)");
  const auto version = get_le<std::uint32_t>(in);
  if (version != kVersion)
    throw ValidationError("unsupported AVST version " + std::to_string(version));
  const auto K = get_le<std::uint32_t>(in);
  const auto L = get_le<std::uint32_t>(in);
  const auto seed = get_le<std::uint64_t>(in);
  const auto digest = get_le<std::uint64_t>(in);
  const std::size_t count = static_cast<std::size_t>(K) * L;
  std::vector<char> packed((count + 3) / 4);
  if (!in.read(packed.data(), static_cast<std::streamsize>(packed.size())))
    throw ValidationError("truncated AVST body");
  std::vector<Action> actions(count);
  for (std::size_t n = 0; n < count; ++n) {
    const unsigned code =
        (static_cast<unsigned char>(packed[n / 4]) >> (2 * (n % 4))) & 0x3u;
    if (code == 3)
      throw ValidationError("reserved action code in AVST");
    actions[n] = static_cast<Action>(code);
  }
  return Avst(K, L, seed, digest, std::move(actions));
}

Avst generate_avst(const Apa &apa, std::size_t L, std::uint64_t seed) {
  if (L < 1)
    throw RangeError("generate_avst: L must be >= 1");
  const std::size_t K = apa.K();
  std::mt19937_64 gen(seed);
  std::vector<Action> actions(K * L);
  for (std::size_t l = 0; l < L; ++l) {
    Action *row = actions.data() + l * K;
    row[0] = Action::Replace;
    std::uint32_t degree = 1;
    for (std::size_t i = 2; i <= K; ++i) {
      const Action a = choose_action(apa.at(i, degree), to_unit(gen()));
      row[i - 1] = a;
      degree = a == Action::Add ? degree + 1 : a == Action::Replace ? 1 : degree;
    }
  }
  return Avst(K, L, seed, apa.digest(), std::move(actions));
}

Packet step_recipe_t(const Packet &pkt, SwitchId my_id, const Avst &avst,
                     const GlobalHash &gh) {
  const std::size_t i = pkt.hop_count + 1;
  if (i > avst.K())
    throw RangeError("hop " + std::to_string(i) + " beyond diameter " +
                     std::to_string(avst.K()));
  Packet out = pkt;
  const std::size_t row = row_select(gh, pkt.packet_id, avst.L());
  const Action a = avst.action(row, i);
  switch (a) {
  case Action::Add:
    out.codeword ^= my_id.value();
    break;
  case Action::Replace:
    out.codeword = my_id.value();
    break;
  case Action::Skip:
    break;
  }
  out.hop_count = static_cast<std::uint32_t>(i);
  return out;
}

bool pint_reservoir_branch(const PintParams &params, const GlobalHash &gh,
                           std::uint64_t packet_id) {
  return gh.branch_hash().uniform(0, packet_id) < params.alpha;
}

Packet step_pint(const Packet &pkt, SwitchId my_id, const PintParams &params,
                 const GlobalHash &gh) {
  const std::size_t i = pkt.hop_count + 1;
  Packet out = pkt;
  const double nu = gh.uniform(i, pkt.packet_id);
  if (pint_reservoir_branch(params, gh, pkt.packet_id)) {
    if (nu * static_cast<double>(i) < 1.0) {
      out.codeword = my_id.value();
      out.degree = 1;
    }
  } else if (nu < params.p) {
    out.codeword ^= my_id.value();
    out.degree += 1;
  }
  out.hop_count = static_cast<std::uint32_t>(i);
  return out;
}

} // namespace recipe
