#pragma once

#include "recipe/feasibility.hpp"
#include "recipe/protocol.hpp"

#include <filesystem>
#include <string>

namespace recipe::io {

// {"K": int, "mu": [[...], ...]}; mu[i-1] has length i. Doubles are
// written with 17 significant digits.
std::string sequence_to_json(const XddSequence &seq);
XddSequence sequence_from_json(const std::string &text);

// {"K": int, "p": [[[pA,pS,pR], ...], ...]}; p[0] = [[0,0,1]], p[i-1]
// holds i-1 triples and null marks an unreachable state.
std::string apa_to_json(const Apa &apa);
Apa apa_from_json(const std::string &text);

std::string read_text(const std::filesystem::path &path);

// Writes to a sibling temporary file and renames it into place.
void write_atomic(const std::filesystem::path &path, const std::string &content);

XddSequence read_sequence(const std::filesystem::path &path);
Apa read_apa(const std::filesystem::path &path);
Avst read_avst(const std::filesystem::path &path);
void write_avst(const std::filesystem::path &path, const Avst &avst);

// FNV-1a of a file's bytes, as 16 hex digits.
std::string file_digest(const std::filesystem::path &path);

} // namespace recipe::io
