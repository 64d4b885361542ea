#pragma once

// File formats: generation traces and detection reports as JSON, corpora as
// JSONL, plus a tiny CSV writer. Every JSON document carries a
// "schema_version" whose major component must match kSchemaMajor.

#include <fstream>
#include <iomanip>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "watersearch/detection.hpp"
#include "watersearch/errors.hpp"
#include "watersearch/search_generation.hpp"

namespace watersearch {

using json = nlohmann::json;

inline constexpr int kSchemaMajor = 1;
inline constexpr const char* kSchemaVersion = "1.0";

inline void check_schema(const json& j, const char* kind) {
  if (!j.contains("schema_version")) throw InputError(std::string(kind) + ": missing schema_version");
  const auto v = j.at("schema_version").get<std::string>();
  int major = -1;
  try {
    major = std::stoi(v.substr(0, v.find('.')));
  } catch (...) {
    throw InputError(std::string(kind) + ": malformed schema_version '" + v + "'");
  }
  if (major != kSchemaMajor)
    throw InputError(std::string(kind) + ": unsupported schema major version " + std::to_string(major));
  if (j.value("kind", std::string(kind)) != kind)
    throw InputError(std::string("expected a ") + kind + " document, got " + j.value("kind", std::string("?")));
}

inline json to_json(const WatermarkConfig& c) {
  return {{"gamma", c.gamma},   {"delta", c.delta},           {"scheme", to_string(c.scheme)},
          {"h", c.h},           {"master_key", c.master_key}, {"modulus", c.modulus},
          {"pool_size", c.pool_size}};
}

inline WatermarkConfig watermark_from_json(const json& j) {
  WatermarkConfig c;
  c.gamma = j.at("gamma").get<double>();
  c.delta = j.at("delta").get<double>();
  c.scheme = parse_scheme(j.at("scheme").get<std::string>());
  c.h = j.at("h").get<int>();
  c.master_key = j.at("master_key").get<std::uint64_t>();
  c.modulus = j.at("modulus").get<std::uint64_t>();
  c.pool_size = j.at("pool_size").get<std::size_t>();
  return c;
}

inline json to_json(const SearchConfig& c) {
  return {{"chunk_size", c.chunk_size},
          {"beams", c.beams},
          {"alpha", c.alpha},
          {"max_tokens", c.max_tokens},
          {"similarity", to_string(c.similarity.kind)},
          {"beta", c.similarity.beta}};
}

inline SearchConfig search_from_json(const json& j) {
  SearchConfig c;
  c.chunk_size = j.at("chunk_size").get<std::size_t>();
  c.beams = j.at("beams").get<std::size_t>();
  c.alpha = j.at("alpha").get<double>();
  c.max_tokens = j.at("max_tokens").get<std::size_t>();
  c.similarity.kind = parse_similarity(j.at("similarity").get<std::string>());
  c.similarity.beta = j.at("beta").get<double>();
  return c;
}

inline json to_json(const GenerationTrace& t) {
  json chunks = json::array();
  for (const auto& c : t.chunks) {
    json cands = json::array();
    for (std::size_t i = 0; i < c.candidates.size(); ++i) {
      const auto& s = c.scores[i];
      cands.push_back({{"tokens", c.candidates[i].tokens},
                       {"ended", c.candidates[i].ended},
                       {"similarity", s.similarity},
                       {"green_fraction", s.green_fraction},
                       {"green_count", s.green_count},
                       {"score", s.score}});
    }
    chunks.push_back({{"chunk_index", c.chunk_index},
                      {"seeds", c.seeds},
                      {"reference", {{"tokens", c.reference.tokens}, {"ended", c.reference.ended}}},
                      {"candidates", std::move(cands)},
                      {"chosen", c.chosen},
                      {"committed", c.committed}});
  }
  return {{"schema_version", kSchemaVersion},
          {"kind", "generation_trace"},
          {"watermark", to_json(t.watermark)},
          {"search", to_json(t.search)},
          {"rng_seed", t.rng_seed},
          {"prompt", t.prompt},
          {"chunks", std::move(chunks)}};
}

inline GenerationTrace trace_from_json(const json& j) {
  check_schema(j, "generation_trace");
  GenerationTrace t;
  t.watermark = watermark_from_json(j.at("watermark"));
  t.search = search_from_json(j.at("search"));
  t.rng_seed = j.at("rng_seed").get<std::uint64_t>();
  t.prompt = j.at("prompt").get<TokenSeq>();
  for (const auto& jc : j.at("chunks")) {
    ChunkRecord c;
    c.chunk_index = jc.at("chunk_index").get<std::size_t>();
    c.seeds = jc.at("seeds").get<std::vector<std::uint64_t>>();
    c.reference.tokens = jc.at("reference").at("tokens").get<TokenSeq>();
    c.reference.ended = jc.at("reference").at("ended").get<bool>();
    for (const auto& jk : jc.at("candidates")) {
      c.candidates.push_back({jk.at("tokens").get<TokenSeq>(), jk.at("ended").get<bool>()});
      c.scores.push_back({jk.at("similarity").get<double>(), jk.at("green_fraction").get<double>(),
                          jk.at("score").get<double>(), jk.at("green_count").get<std::size_t>()});
    }
    c.chosen = jc.at("chosen").get<std::size_t>();
    c.committed = jc.at("committed").get<TokenSeq>();
    t.chunks.push_back(std::move(c));
  }
  return t;
}

inline json to_json(const DetectionReport& r) {
  json chunks = json::array();
  for (const auto& c : r.chunks)
    chunks.push_back({{"chunk_index", c.chunk_index},
                      {"length", c.length},
                      {"n_effective", c.n_effective},
                      {"green_counts", c.green_counts},
                      {"z_max", c.z_max},
                      {"p_value", c.p_value},
                      {"skipped", c.skipped}});
  std::ostringstream fp;
  fp << std::hex << std::setw(16) << std::setfill('0') << key_fingerprint(r.watermark.master_key);
  return {{"schema_version", kSchemaVersion},
          {"kind", "detection_report"},
          {"config",
           {{"gamma", r.watermark.gamma},
            {"h", r.watermark.h},
            {"k", r.beams},
            {"m", r.chunk_size},
            {"scheme", to_string(r.watermark.scheme)},
            {"modulus", r.watermark.modulus},
            {"pool_size", r.watermark.pool_size},
            {"key_fingerprint", fp.str()},
            {"prompt_supplied", r.prompt_supplied}}},
          {"chunks", std::move(chunks)},
          {"fisher_stat", r.fisher_stat},
          {"doc_p_value", r.doc_p_value},
          {"threshold", r.threshold},
          {"verdict", r.watermarked ? "watermarked" : "not_watermarked"}};
}

// Reads back the statistical content of a report. The master key is not
// recoverable from its fingerprint, so `watermark.master_key` stays 0.
inline DetectionReport report_from_json(const json& j) {
  check_schema(j, "detection_report");
  DetectionReport r;
  const auto& c = j.at("config");
  r.watermark.gamma = c.at("gamma").get<double>();
  r.watermark.h = c.at("h").get<int>();
  r.watermark.scheme = parse_scheme(c.at("scheme").get<std::string>());
  r.watermark.modulus = c.at("modulus").get<std::uint64_t>();
  r.watermark.pool_size = c.at("pool_size").get<std::size_t>();
  r.watermark.master_key = 0;
  r.beams = c.at("k").get<std::size_t>();
  r.chunk_size = c.at("m").get<std::size_t>();
  r.prompt_supplied = c.at("prompt_supplied").get<bool>();
  for (const auto& jc : j.at("chunks")) {
    ChunkDetection d;
    d.chunk_index = jc.at("chunk_index").get<std::size_t>();
    d.length = jc.at("length").get<std::size_t>();
    d.n_effective = jc.at("n_effective").get<std::size_t>();
    d.green_counts = jc.at("green_counts").get<std::vector<std::size_t>>();
    d.z_max = jc.at("z_max").get<std::size_t>();
    d.p_value = jc.at("p_value").get<double>();
    d.skipped = jc.at("skipped").get<bool>();
    r.chunks.push_back(std::move(d));
  }
  r.fisher_stat = j.at("fisher_stat").get<double>();
  r.doc_p_value = j.at("doc_p_value").get<double>();
  r.threshold = j.at("threshold").get<double>();
  r.watermarked = j.at("verdict").get<std::string>() == "watermarked";
  return r;
}

struct CorpusDocument {
  std::string id;
  std::string prompt;
  std::optional<std::string> reference;
};

// JSONL, one {"id", "prompt", "reference"?} object per line. Ids must be unique.
inline std::vector<CorpusDocument> read_corpus(std::istream& is) {
  std::vector<CorpusDocument> docs;
  std::set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw InputError("corpus line " + std::to_string(lineno) + ": " + e.what());
    }
    CorpusDocument d;
    if (j.at("id").is_number())
      d.id = std::to_string(j.at("id").get<long long>());
    else
      d.id = j.at("id").get<std::string>();
    d.prompt = j.at("prompt").get<std::string>();
    if (j.contains("reference") && !j.at("reference").is_null()) d.reference = j.at("reference").get<std::string>();
    if (!seen.insert(d.id).second) throw InputError("duplicate corpus id '" + d.id + "'");
    docs.push_back(std::move(d));
  }
  return docs;
}

inline void write_corpus(std::ostream& os, const std::vector<CorpusDocument>& docs) {
  for (const auto& d : docs) {
    json j{{"id", d.id}, {"prompt", d.prompt}};
    if (d.reference) j["reference"] = *d.reference;
    os << j.dump() << '\n';
  }
}

// Minimal CSV writer; quotes fields containing separators.
class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& os) : os_(os) {}

  template <typename... Ts>
  void row(const Ts&... fields) {
    bool first = true;
    ((emit(fields, first)), ...);
    os_ << '\n';
  }

  void row(const std::vector<std::string>& fields) {
    bool first = true;
    for (const auto& f : fields) emit(f, first);
    os_ << '\n';
  }

 private:
  template <typename T>
  void emit(const T& v, bool& first) {
    if (!first) os_ << ',';
    first = false;
    std::ostringstream ss;
    if constexpr (std::is_floating_point_v<T>)
      ss << std::setprecision(10) << v;
    else
      ss << v;
    auto s = ss.str();
    if (s.find_first_of(",\"\n") != std::string::npos) {
      std::string q = "\"";
      for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
      s = q + "\"";
    }
    os_ << s;
  }

  std::ostream& os_;
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace watersearch
