#include "recipe/decoder.hpp"

#include <algorithm>
#include <limits>

namespace recipe {

namespace {

template <class... Ts> struct overloaded : Ts... { using Ts::operator()...; };
template <class... Ts> overloaded(Ts...) -> overloaded<Ts...>;

const Apa &require(const RecipeDScheme &s) {
  if (!s.apa)
    throw ConfigurationError("RECIPE-d decoding needs an APA");
  return *s.apa;
}

const Avst &require(const RecipeTScheme &s) {
  if (!s.avst)
    throw ConfigurationError("RECIPE-t decoding needs an AVST");
  if (s.expected_apa_digest && *s.expected_apa_digest != s.avst->apa_digest())
    throw ConfigurationError("AVST was generated from a different APA");
  return *s.avst;
}

} // namespace

std::size_t scheme_diameter(const Scheme &scheme) {
  return std::visit(
      overloaded{[](const RecipeDScheme &s) { return require(s).K(); },
                 [](const RecipeTScheme &s) { return require(s).K(); },
                 [](const PintScheme &) { return std::numeric_limits<std::size_t>::max(); }},
      scheme);
}

Packet encode_path(std::uint64_t packet_id, std::span<const SwitchId> ids,
                   const Scheme &scheme, const GlobalHash &gh) {
  Packet pkt;
  pkt.packet_id = packet_id;
  std::visit(overloaded{[&](const RecipeDScheme &s) {
                          const Apa &apa = require(s);
                          for (const SwitchId &id : ids)
                            pkt = step_recipe_d(pkt, id, apa, gh);
                        },
                        [&](const RecipeTScheme &s) {
                          const Avst &avst = require(s);
                          for (const SwitchId &id : ids)
                            pkt = step_recipe_t(pkt, id, avst, gh);
                        },
                        [&](const PintScheme &s) {
                          for (const SwitchId &id : ids)
                            pkt = step_pint(pkt, id, s.params, gh);
                        }},
             scheme);
  return pkt;
}

void replay_xor_set(std::uint64_t packet_id, std::size_t k, const Scheme &scheme,
                    const GlobalHash &gh, std::vector<std::uint32_t> &out) {
  out.clear();
  if (k == 0)
    return;
  if (k > scheme_diameter(scheme))
    throw ConfigurationError("path length " + std::to_string(k) +
                             " exceeds the scheme's diameter");
  std::visit(
      overloaded{
          [&](const RecipeDScheme &s) {
            const Apa &apa = require(s);
            std::uint32_t degree = 0;
            for (std::uint32_t i = 1; i <= k; ++i) {
              const Action a = choose_action(apa.at(i, degree), gh.uniform(i, packet_id));
              if (a == Action::Add) {
                out.push_back(i);
                ++degree;
              } else if (a == Action::Replace) {
                out.assign(1, i);
                degree = 1;
              }
            }
          },
          [&](const RecipeTScheme &s) {
            const Avst &avst = require(s);
            const std::size_t row = row_select(gh, packet_id, avst.L());
            for (std::uint32_t i = 1; i <= k; ++i) {
              const Action a = avst.action(row, i);
              if (a == Action::Add)
                out.push_back(i);
              else if (a == Action::Replace)
                out.assign(1, i);
            }
          },
          [&](const PintScheme &s) {
            const bool reservoir = pint_reservoir_branch(s.params, gh, packet_id);
            for (std::uint32_t i = 1; i <= k; ++i) {
              const double nu = gh.uniform(i, packet_id);
              if (reservoir) {
                if (nu * static_cast<double>(i) < 1.0)
                  out.assign(1, i);
              } else if (nu < s.params.p) {
                out.push_back(i);
              }
            }
          }},
      scheme);
}

std::vector<std::uint32_t> replay_xor_set(std::uint64_t packet_id, std::size_t k,
                                          const Scheme &scheme, const GlobalHash &gh) {
  std::vector<std::uint32_t> out;
  replay_xor_set(packet_id, k, scheme, gh, out);
  return out;
}

PeelingState::PeelingState(std::size_t k)
    : k_(k), resolved_(k + 1), by_hop_(k + 1) {}

std::map<std::uint32_t, SwitchId> PeelingState::ids() const {
  std::map<std::uint32_t, SwitchId> out;
  for (std::uint32_t h = 1; h <= k_; ++h)
    if (resolved_[h])
      out.emplace(h, SwitchId(*resolved_[h]));
  return out;
}

std::size_t PeelingState::pending_count() const {
  return static_cast<std::size_t>(
      std::count_if(pending_.begin(), pending_.end(), [](const Pending &p) { return !p.done; }));
}

std::vector<PeelingState::PendingView> PeelingState::pending() const {
  std::vector<PendingView> out;
  for (const auto &p : pending_) {
    if (p.done)
      continue;
    PendingView v{p.value, {}};
    for (auto h : p.hops)
      if (!resolved_[h])
        v.unresolved.push_back(h);
    out.push_back(std::move(v));
  }
  return out;
}

std::vector<std::uint32_t> PeelingState::insert(const ReceivedCodeword &cw) {
  if (cw.path_length != k_)
    throw RangeError("codeword path length " + std::to_string(cw.path_length) +
                     " does not match decoder k=" + std::to_string(k_));
  return insert(cw.xor_set, cw.codeword);
}

std::vector<std::uint32_t> PeelingState::insert(std::span<const std::uint32_t> xor_set,
                                                Word value) {
  std::vector<std::uint32_t> newly;
  Pending p{value, 0, 0, false, {}};
  for (std::uint32_t h : xor_set) {
    if (h < 1 || h > k_)
      throw RangeError("XOR-set member " + std::to_string(h) + " outside 1.." +
                       std::to_string(k_));
    if (resolved_[h]) {
      p.value ^= *resolved_[h];
    } else {
      ++p.remaining;
      p.hop_xor ^= h;
      p.hops.push_back(h);
    }
  }
  if (p.remaining == 0) {
    // Nothing new; what is left must cancel.
    if (p.value != 0 && !xor_set.empty())
      throw CorruptionError("codeword disagrees with already resolved IDs");
    return newly;
  }
  if (p.remaining == 1) {
    resolve(p.hop_xor, p.value, newly);
  } else {
    const auto index = static_cast<std::uint32_t>(pending_.size());
    for (std::uint32_t h : p.hops)
      by_hop_[h].push_back(index);
    pending_.push_back(std::move(p));
  }

  while (!queue_.empty()) {
    const std::uint32_t h = queue_.back();
    queue_.pop_back();
    const Word id = *resolved_[h];
    for (std::uint32_t index : by_hop_[h]) {
      Pending &q = pending_[index];
      if (q.done)
        continue;
      q.value ^= id;
      q.hop_xor ^= h;
      if (--q.remaining == 1) {
        q.done = true;
        resolve(q.hop_xor, q.value, newly);
      } else if (q.remaining == 0) {
        q.done = true;
        if (q.value != 0)
          throw CorruptionError("pending codeword inconsistent after peeling");
      }
    }
    by_hop_[h].clear();
  }
  return newly;
}

void PeelingState::resolve(std::uint32_t hop, Word value, std::vector<std::uint32_t> &newly) {
  if (resolved_[hop]) {
    if (*resolved_[hop] != value)
      throw CorruptionError("hop " + std::to_string(hop) + " resolved to two different IDs");
    return;
  }
  if (value == 0)
    throw CorruptionError("hop " + std::to_string(hop) + " resolved to the zero ID");
  resolved_[hop] = value;
  ++resolved_count_;
  newly.push_back(hop);
  queue_.push_back(hop);
}

DecodeResult decode_stream(std::span<const ReceivedCodeword> codewords, std::size_t k) {
  PeelingState state(k);
  DecodeResult result;
  if (k == 0) {
    result.complete = true;
    return result;
  }
  for (const auto &cw : codewords) {
    ++result.used;
    state.insert(cw);
    if (state.complete())
      break;
  }
  result.complete = state.complete();
  result.ids = state.ids();
  return result;
}

} // namespace recipe
