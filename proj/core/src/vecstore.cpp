#include "structmap/vecstore.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "binary_io.hpp"
#include "structmap/error.hpp"

namespace structmap {
namespace {

using ordered_json = nlohmann::ordered_json;

constexpr char kMagic[4] = {'S', 'V', 'E', 'C'};

const std::vector<std::string>& token_fields() {
  static const std::vector<std::string> fields = {
      "group_id", "sent_id", "variant", "tok_idx", "form",     "lex_id", "pos",
      "is_function", "dep", "head_dep", "depth", "cpath", "row"};
  return fields;
}

const std::vector<std::string>& header_fields() {
  static const std::vector<std::string> fields = {"format_version", "has_constituency",
                                                  "has_dependency"};
  return fields;
}

void check_keys(const ordered_json& obj, const std::vector<std::string>& expected,
                const std::string& where) {
  if (!obj.is_object()) throw Error(ErrorCode::ParseError, where + ": expected an object");
  for (const auto& [key, _] : obj.items()) {
    if (std::find(expected.begin(), expected.end(), key) == expected.end())
      throw Error(ErrorCode::ParseError, where + ": unknown field '" + key + "'");
  }
  for (const auto& key : expected) {
    if (!obj.contains(key))
      throw Error(ErrorCode::ParseError, where + ": missing field '" + key + "'");
  }
}

template <typename T>
T field(const ordered_json& obj, const char* key, const std::string& where) {
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, where + ": bad field '" + key + "': " + e.what());
  }
}

std::string token_label(std::size_t i, const TokenRecord& t) {
  return "token " + std::to_string(i) + " (sent " + std::to_string(t.sent_id) + ", tok " +
         std::to_string(t.tok_idx) + ")";
}

}  // namespace

bool VectorStore::bit_equal(const VectorStore& other) const noexcept {
  return dim == other.dim && data.size() == other.data.size() &&
         (data.empty() ||
          std::memcmp(data.data(), other.data.data(), data.size() * sizeof(float)) == 0);
}

// ---------------------------------------------------------------------------
// Dataset index

void Dataset::reindex() {
  sentences_.clear();
  group_pos_.clear();
  groups.clear();

  std::map<std::int64_t, std::map<std::pair<std::int32_t, std::int64_t>, bool>> members;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto& t = tokens[i];
    if (t.tok_idx < 0) continue;
    auto& slots = sentences_[t.sent_id];
    if (slots.size() <= static_cast<std::size_t>(t.tok_idx))
      slots.resize(static_cast<std::size_t>(t.tok_idx) + 1, npos);
    if (slots[static_cast<std::size_t>(t.tok_idx)] == npos)
      slots[static_cast<std::size_t>(t.tok_idx)] = i;
    members[t.group_id][{t.variant, t.sent_id}] = true;
  }

  groups.reserve(members.size());
  for (const auto& [gid, sents] : members) {
    EquivalenceGroup g;
    g.group_id = gid;
    for (const auto& [key, _] : sents) g.sentence_ids.push_back(key.second);
    const auto& first = sentences_.at(g.sentence_ids.front());
    g.length = static_cast<std::int32_t>(first.size());
    for (std::size_t k = 0; k < first.size(); ++k) {
      if (first[k] != npos && !tokens[first[k]].is_function)
        g.content_indices.push_back(static_cast<std::int32_t>(k));
    }
    group_pos_[gid] = groups.size();
    groups.push_back(std::move(g));
  }
}

std::optional<std::size_t> Dataset::token_at(std::int64_t sent_id, std::int32_t tok_idx) const {
  auto it = sentences_.find(sent_id);
  if (it == sentences_.end() || tok_idx < 0 ||
      static_cast<std::size_t>(tok_idx) >= it->second.size())
    return std::nullopt;
  const auto idx = it->second[static_cast<std::size_t>(tok_idx)];
  if (idx == npos) return std::nullopt;
  return idx;
}

std::uint64_t Dataset::row_at(std::int64_t sent_id, std::int32_t tok_idx) const {
  const auto idx = token_at(sent_id, tok_idx);
  if (!idx)
    throw Error(ErrorCode::RowOutOfRange, "no token at sent " + std::to_string(sent_id) +
                                              ", tok " + std::to_string(tok_idx));
  return tokens[*idx].row;
}

const std::vector<std::size_t>* Dataset::sentence(std::int64_t sent_id) const {
  auto it = sentences_.find(sent_id);
  return it == sentences_.end() ? nullptr : &it->second;
}

const EquivalenceGroup* Dataset::group(std::int64_t group_id) const {
  auto it = group_pos_.find(group_id);
  return it == group_pos_.end() ? nullptr : &groups[it->second];
}

DatasetPaths dataset_paths(const std::filesystem::path& dir) {
  return {dir / "vectors.svec", dir / "tokens.jsonl"};
}

// ---------------------------------------------------------------------------
// Vector file

VectorStore read_vectors(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());

  char magic[4] = {};
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
    throw Error(ErrorCode::BadMagic, path.string() + " is not an SVEC file");
  std::uint16_t version = 0;
  std::uint32_t dim = 0;
  std::uint64_t count = 0;
  if (!detail::get_le(in, version) || !detail::get_le(in, dim) || !detail::get_le(in, count))
    throw Error(ErrorCode::CountMismatch, path.string() + ": truncated header");
  if (version != kSvecVersion)
    throw Error(ErrorCode::ParseError,
                path.string() + ": unsupported SVEC version " + std::to_string(version));
  if (dim == 0 && count > 0)
    throw Error(ErrorCode::DimMismatch, path.string() + ": dim 0 with nonzero count");

  const auto file_size = std::filesystem::file_size(path);
  const std::uint64_t payload = file_size - kSvecHeaderBytes;
  const std::uint64_t expected = count * dim * sizeof(float);
  if (dim != 0 && (count > payload / dim / sizeof(float) || payload != expected))
    throw Error(ErrorCode::CountMismatch,
                path.string() + ": header count " + std::to_string(count) + " needs " +
                    std::to_string(expected) + " payload bytes, file has " +
                    std::to_string(payload));
  if (dim == 0 && payload != 0)
    throw Error(ErrorCode::CountMismatch, path.string() + ": trailing bytes after header");

  VectorStore store;
  store.dim = dim;
  store.data.resize(count * dim);
  if (!detail::get_le_array(in, std::span<float>(store.data)))
    throw Error(ErrorCode::CountMismatch, path.string() + ": truncated payload");
  for (std::size_t i = 0; i < store.data.size(); ++i) {
    if (!std::isfinite(store.data[i]))
      throw Error(ErrorCode::NonFinite, path.string() + ": non-finite value at row " +
                                            std::to_string(i / dim) + ", column " +
                                            std::to_string(i % dim));
  }
  return store;
}

void write_vectors(const VectorStore& store, const std::filesystem::path& path) {
  if (store.dim == 0 && !store.data.empty())
    throw Error(ErrorCode::DimMismatch, "vector store has data but dim 0");
  if (store.dim != 0 && store.data.size() % store.dim != 0)
    throw Error(ErrorCode::CountMismatch, "vector store size is not a multiple of dim");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out.write(kMagic, 4);
  detail::put_le(out, kSvecVersion);
  detail::put_le(out, store.dim);
  detail::put_le(out, static_cast<std::uint64_t>(store.count()));
  detail::put_le_array(out, std::span<const float>(store.data));
  if (!out.flush()) throw Error(ErrorCode::IoError, "failed writing " + path.string());
}

// ---------------------------------------------------------------------------
// Metadata

std::string token_to_json_line(const TokenRecord& t) {
  ordered_json j;
  j["group_id"] = t.group_id;
  j["sent_id"] = t.sent_id;
  j["variant"] = t.variant;
  j["tok_idx"] = t.tok_idx;
  j["form"] = t.form;
  j["lex_id"] = t.lex_id;
  j["pos"] = t.pos;
  j["is_function"] = t.is_function;
  j["dep"] = t.dep;
  j["head_dep"] = t.head_dep;
  j["depth"] = t.depth;
  j["cpath"] = t.cpath;
  j["row"] = t.row;
  return j.dump();
}

TokenRecord token_from_json_line(const std::string& line) {
  ordered_json j;
  try {
    j = ordered_json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("malformed token line: ") + e.what());
  }
  const std::string where = "token record";
  check_keys(j, token_fields(), where);
  TokenRecord t;
  t.group_id = field<std::int64_t>(j, "group_id", where);
  t.sent_id = field<std::int64_t>(j, "sent_id", where);
  t.variant = field<std::int32_t>(j, "variant", where);
  t.tok_idx = field<std::int32_t>(j, "tok_idx", where);
  t.form = field<std::string>(j, "form", where);
  t.lex_id = field<std::int64_t>(j, "lex_id", where);
  t.pos = field<std::string>(j, "pos", where);
  t.is_function = field<bool>(j, "is_function", where);
  t.dep = field<std::string>(j, "dep", where);
  t.head_dep = field<std::string>(j, "head_dep", where);
  t.depth = field<std::int32_t>(j, "depth", where);
  t.cpath = field<std::vector<std::string>>(j, "cpath", where);
  if (!j.at("row").is_number_unsigned())
    throw Error(ErrorCode::ParseError, where + ": field 'row' must be a non-negative integer");
  t.row = j.at("row").get<std::uint64_t>();
  return t;
}

namespace {

struct MetaFile {
  bool has_constituency = false;
  bool has_dependency = false;
  std::vector<TokenRecord> tokens;
};

MetaFile read_meta(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  MetaFile meta;
  std::string line;
  bool header_seen = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (!header_seen) {
      ordered_json j;
      try {
        j = ordered_json::parse(line);
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, path.string() + ":1: " + e.what());
      }
      const std::string where = path.string() + ": header";
      check_keys(j, header_fields(), where);
      const int version = field<int>(j, "format_version", where);
      if (version != kMetaFormatVersion)
        throw Error(ErrorCode::ParseError,
                    where + ": unsupported format_version " + std::to_string(version));
      meta.has_constituency = field<bool>(j, "has_constituency", where);
      meta.has_dependency = field<bool>(j, "has_dependency", where);
      header_seen = true;
      continue;
    }
    try {
      meta.tokens.push_back(token_from_json_line(line));
    } catch (const Error& e) {
      throw Error(e.code(), path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return meta;
}

}  // namespace

Dataset load_dataset(const std::filesystem::path& vector_path,
                     const std::filesystem::path& meta_path,
                     std::optional<std::uint32_t> expected_dim) {
  Dataset d;
  d.store = read_vectors(vector_path);
  if (expected_dim && d.store.count() > 0 && d.store.dim != *expected_dim)
    throw Error(ErrorCode::DimMismatch, vector_path.string() + ": dim " +
                                            std::to_string(d.store.dim) + ", expected " +
                                            std::to_string(*expected_dim));
  auto meta = read_meta(meta_path);
  d.tokens = std::move(meta.tokens);
  d.has_constituency = meta.has_constituency;
  d.has_dependency = meta.has_dependency;

  const auto count = d.store.count();
  for (std::size_t i = 0; i < d.tokens.size(); ++i) {
    if (d.tokens[i].row >= count)
      throw Error(ErrorCode::RowOutOfRange,
                  token_label(i, d.tokens[i]) + ": row " + std::to_string(d.tokens[i].row) +
                      " >= count " + std::to_string(count));
  }
  d.reindex();

  // Single-sentence groups are loadable; they are reported by validate() and
  // ignored by the sampler.
  for (const auto& v : validate(d)) {
    switch (v.kind) {
      case ViolationKind::GroupTooSmall:
        break;
      case ViolationKind::Group:
        throw Error(ErrorCode::InconsistentGroup, v.record + ": " + v.message);
      case ViolationKind::Vectors:
        throw Error(ErrorCode::NonFinite, v.record + ": " + v.message);
      case ViolationKind::Token:
        throw Error(ErrorCode::ParseError, v.record + ": " + v.message);
    }
  }
  return d;
}

Dataset load_dataset(const std::filesystem::path& dir) {
  const auto paths = dataset_paths(dir);
  return load_dataset(paths.vectors, paths.meta);
}

void write_dataset(const Dataset& d, const std::filesystem::path& vector_path,
                   const std::filesystem::path& meta_path) {
  write_vectors(d.store, vector_path);
  std::ofstream out(meta_path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + meta_path.string());
  if (!d.tokens.empty()) {
    ordered_json header;
    header["format_version"] = kMetaFormatVersion;
    header["has_constituency"] = d.has_constituency;
    header["has_dependency"] = d.has_dependency;
    out << header.dump() << '\n';
    for (const auto& t : d.tokens) out << token_to_json_line(t) << '\n';
  }
  if (!out.flush()) throw Error(ErrorCode::IoError, "failed writing " + meta_path.string());
}

void write_dataset(const Dataset& d, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto paths = dataset_paths(dir);
  write_dataset(d, paths.vectors, paths.meta);
}

// ---------------------------------------------------------------------------
// Validation

std::vector<Violation> validate(const Dataset& d) {
  std::vector<Violation> out;
  const auto& store = d.store;
  if (store.dim == 0 && !store.data.empty())
    out.push_back({ViolationKind::Vectors, "vectors", "dim is 0 but data is present"});
  if (store.dim != 0 && store.data.size() % store.dim != 0)
    out.push_back({ViolationKind::Vectors, "vectors", "data size is not a multiple of dim"});
  for (std::size_t i = 0; i < store.data.size(); ++i) {
    if (!std::isfinite(store.data[i])) {
      out.push_back({ViolationKind::Vectors, "vectors row " + std::to_string(i / store.dim), "non-finite value"});
      break;
    }
  }

  const auto count = store.count();
  std::map<std::int64_t, std::int64_t> sent_group;
  std::map<std::int64_t, std::int32_t> sent_variant;
  std::set<std::pair<std::int64_t, std::int32_t>> seen;
  for (std::size_t i = 0; i < d.tokens.size(); ++i) {
    const auto& t = d.tokens[i];
    const auto label = token_label(i, t);
    if (t.row >= count)
      out.push_back({ViolationKind::Token, label, "row " + std::to_string(t.row) + " >= count " + std::to_string(count)});
    if (t.depth < 0) out.push_back({ViolationKind::Token, label, "negative depth " + std::to_string(t.depth)});
    if (t.tok_idx < 0) out.push_back({ViolationKind::Token, label, "negative tok_idx"});
    if (t.variant < 0) out.push_back({ViolationKind::Token, label, "negative variant"});
    if (d.has_constituency && t.cpath.empty())
      out.push_back({ViolationKind::Token, label, "empty cpath in a dataset with constituency annotations"});
    if (!seen.insert({t.sent_id, t.tok_idx}).second)
      out.push_back({ViolationKind::Token, label, "duplicate (sent_id, tok_idx)"});
    auto [git, ginserted] = sent_group.emplace(t.sent_id, t.group_id);
    if (!ginserted && git->second != t.group_id)
      out.push_back({ViolationKind::Token, label, "sentence belongs to more than one group"});
    auto [vit, vinserted] = sent_variant.emplace(t.sent_id, t.variant);
    if (!vinserted && vit->second != t.variant)
      out.push_back({ViolationKind::Token, label, "sentence has inconsistent variant numbers"});
  }

  for (const auto& g : d.groups) {
    const std::string label = "group " + std::to_string(g.group_id);
    if (g.sentence_ids.size() < 2)
      out.push_back({ViolationKind::GroupTooSmall, label, "group has fewer than two sentences (unusable for training)"});
    const std::vector<std::size_t>* ref = nullptr;
    for (const auto sid : g.sentence_ids) {
      const auto* sent = d.sentence(sid);
      if (!sent) continue;
      if (std::find(sent->begin(), sent->end(), Dataset::npos) != sent->end())
        out.push_back({ViolationKind::Group, label, "sentence " + std::to_string(sid) + " has missing token positions"});
      if (!ref) {
        ref = sent;
        continue;
      }
      if (sent->size() != ref->size()) {
        out.push_back({ViolationKind::Group, label, "variant lengths differ (" + std::to_string(ref->size()) + " vs " +
                                  std::to_string(sent->size()) + ", sentence " +
                                  std::to_string(sid) + ")"});
        continue;
      }
      for (std::size_t k = 0; k < sent->size(); ++k) {
        const auto a = (*ref)[k];
        const auto b = (*sent)[k];
        if (a == Dataset::npos || b == Dataset::npos) continue;
        if (d.tokens[a].is_function != d.tokens[b].is_function) {
          out.push_back({ViolationKind::Group, label, "function-word masks differ at position " + std::to_string(k) +
                                    " (sentence " + std::to_string(sid) + ")"});
          break;
        }
      }
    }
  }
  return out;
}

}  // namespace structmap
