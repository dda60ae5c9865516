#include "recipe/io.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <unistd.h>

namespace recipe::io {

using nlohmann::json;

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json parse(const std::string &text, const char *what) {
  try {
    return json::parse(text);
  } catch (const json::exception &e) {
    throw ValidationError(std::string("malformed ") + what + " JSON: " + e.what());
  }
}

std::size_t read_K(const json &doc) {
  if (!doc.is_object() || !doc.contains("K") || !doc["K"].is_number_integer() ||
      doc["K"].get<long long>() < 1)
    throw ValidationError("missing or invalid \"K\"");
  return doc["K"].get<std::size_t>();
}

double as_number(const json &v) {
  if (!v.is_number())
    throw ValidationError("expected a number, got " + v.dump());
  return v.get<double>();
}

} // namespace

std::string sequence_to_json(const XddSequence &seq) {
  std::string out = "{\"K\": " + std::to_string(seq.K()) + ", \"mu\": [\n";
  for (std::size_t i = 1; i <= seq.K(); ++i) {
    out += "  [";
    const auto mass = seq[i].mass();
    for (std::size_t d = 0; d < mass.size(); ++d) {
      if (d)
        out += ", ";
      out += fmt17(mass[d]);
    }
    out += i < seq.K() ? "],\n" : "]\n";
  }
  out += "]}\n";
  return out;
}

XddSequence sequence_from_json(const std::string &text) {
  const json doc = parse(text, "XDD sequence");
  const std::size_t K = read_K(doc);
  if (!doc.contains("mu") || !doc["mu"].is_array() || doc["mu"].size() != K)
    throw ValidationError("\"mu\" must be an array of K rows");
  std::vector<Xdd> xdds;
  xdds.reserve(K);
  for (std::size_t i = 1; i <= K; ++i) {
    const json &row = doc["mu"][i - 1];
    if (!row.is_array() || row.size() != i)
      throw ValidationError("mu[" + std::to_string(i - 1) + "] must have length " +
                            std::to_string(i));
    std::vector<double> mass;
    mass.reserve(i);
    for (const auto &v : row)
      mass.push_back(as_number(v));
    xdds.emplace_back(std::move(mass), kFileTolerance);
  }
  return XddSequence(std::move(xdds));
}

std::string apa_to_json(const Apa &apa) {
  std::string out = "{\"K\": " + std::to_string(apa.K()) + ", \"p\": [\n";
  const auto &rows = apa.rows();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out += "  [";
    for (std::size_t d = 0; d < rows[i].size(); ++d) {
      if (d)
        out += ", ";
      const auto &e = rows[i][d];
      if (!e)
        out += "null";
      else
        out += "[" + fmt17(e->add) + ", " + fmt17(e->skip) + ", " + fmt17(e->replace) + "]";
    }
    out += i + 1 < rows.size() ? "],\n" : "]\n";
  }
  out += "]}\n";
  return out;
}

Apa apa_from_json(const std::string &text) {
  const json doc = parse(text, "APA");
  const std::size_t K = read_K(doc);
  if (!doc.contains("p") || !doc["p"].is_array() || doc["p"].size() != K)
    throw ValidationError("\"p\" must be an array of K rows");
  std::vector<std::vector<Apa::Entry>> rows;
  rows.reserve(K);
  for (std::size_t i = 1; i <= K; ++i) {
    const json &row = doc["p"][i - 1];
    const std::size_t expected = i == 1 ? 1 : i - 1;
    if (!row.is_array() || row.size() != expected)
      throw ValidationError("p[" + std::to_string(i - 1) + "] must have " +
                            std::to_string(expected) + " entries");
    std::vector<Apa::Entry> entries;
    for (const auto &e : row) {
      if (e.is_null()) {
        entries.emplace_back();
        continue;
      }
      if (!e.is_array() || e.size() != 3)
        throw ValidationError("APA entries must be [pA, pS, pR] or null");
      entries.emplace_back(ActionProbs{as_number(e[0]), as_number(e[1]), as_number(e[2])});
    }
    rows.push_back(std::move(entries));
  }
  return Apa(std::move(rows));
}

std::string read_text(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_atomic(const std::filesystem::path &path, const std::string &content) {
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
      throw Error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out)
      throw Error("failed writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw Error("cannot move output into " + path.string() + ": " + ec.message());
  }
}

XddSequence read_sequence(const std::filesystem::path &path) {
  return sequence_from_json(read_text(path));
}

Apa read_apa(const std::filesystem::path &path) { return apa_from_json(read_text(path)); }

Avst read_avst(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error("cannot open " + path.string());
  return Avst::read(in);
}

void write_avst(const std::filesystem::path &path, const Avst &avst) {
  std::ostringstream out(std::ios::binary);
  avst.write(out);
  write_atomic(path, out.str());
}

std::string file_digest(const std::filesystem::path &path) {
  const std::string bytes = read_text(path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

} // namespace recipe::io
