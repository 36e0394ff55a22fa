#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace structmap {

/// Dense row-major float32 matrix of `count` vectors with `dim` entries each.
struct VectorStore {
  std::uint32_t dim = 0;
  std::vector<float> data;

  std::uint64_t count() const noexcept {
    return dim == 0 ? 0 : data.size() / dim;
  }
  std::span<const float> row(std::uint64_t r) const {
    return {data.data() + r * dim, dim};
  }
  std::span<float> row(std::uint64_t r) { return {data.data() + r * dim, dim}; }

  /// Bitwise equality of dim and every stored float.
  bool bit_equal(const VectorStore& other) const noexcept;
};

/// One word occurrence together with its structural annotations.
struct TokenRecord {
  std::int64_t group_id = 0;
  std::int64_t sent_id = 0;
  std::int32_t variant = 0;  // 0 = original sentence
  std::int32_t tok_idx = 0;
  std::string form;
  std::int64_t lex_id = 0;
  std::string pos;
  bool is_function = false;
  std::string dep;
  std::string head_dep;
  std::int32_t depth = 0;
  std::vector<std::string> cpath;  // smallest phrase first, root last
  std::uint64_t row = 0;

  bool operator==(const TokenRecord&) const = default;
};

/// Structurally equivalent sentence variants sharing token positions.
struct EquivalenceGroup {
  std::int64_t group_id = 0;
  std::vector<std::int64_t> sentence_ids;  // ordered by (variant, sent_id)
  std::int32_t length = 0;
  std::vector<std::int32_t> content_indices;  // ascending

  bool operator==(const EquivalenceGroup&) const = default;
};

enum class ViolationKind {
  Vectors,
  Token,
  Group,
  GroupTooSmall,  // loadable, but the group cannot be used for training
};

struct Violation {
  ViolationKind kind;
  std::string record;  // e.g. "token 12 (sent 3, tok 1)" or "group 7"
  std::string message;
};

/// Vectors, token annotations and the derived group structure.
///
/// `groups` and the sentence index are derived from `tokens`; call reindex()
/// after editing tokens by hand. Loaders and generators return indexed
/// datasets.
class Dataset {
 public:
  VectorStore store;
  std::vector<TokenRecord> tokens;
  std::vector<EquivalenceGroup> groups;
  bool has_constituency = false;
  bool has_dependency = false;

  /// Rebuilds `groups` and the (sent_id, tok_idx) lookup from `tokens`.
  void reindex();

  /// Index into `tokens` of the token at (sent_id, tok_idx), if present.
  std::optional<std::size_t> token_at(std::int64_t sent_id,
                                      std::int32_t tok_idx) const;

  /// Store row of the token at (sent_id, tok_idx); throws RowOutOfRange if absent.
  std::uint64_t row_at(std::int64_t sent_id, std::int32_t tok_idx) const;

  /// Tokens of one sentence, indexed by tok_idx (npos where missing).
  const std::vector<std::size_t>* sentence(std::int64_t sent_id) const;

  const EquivalenceGroup* group(std::int64_t group_id) const;

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  std::unordered_map<std::int64_t, std::vector<std::size_t>> sentences_;
  std::unordered_map<std::int64_t, std::size_t> group_pos_;
};

/// File locations of a dataset directory.
struct DatasetPaths {
  std::filesystem::path vectors;
  std::filesystem::path meta;
};
DatasetPaths dataset_paths(const std::filesystem::path& dir);

inline constexpr std::uint16_t kSvecVersion = 1;
inline constexpr std::size_t kSvecHeaderBytes = 18;
inline constexpr int kMetaFormatVersion = 1;

VectorStore read_vectors(const std::filesystem::path& path);
void write_vectors(const VectorStore& store, const std::filesystem::path& path);

/// Reads and validates a dataset. Throws Error with BadMagic, DimMismatch,
/// CountMismatch, NonFinite, RowOutOfRange, InconsistentGroup or ParseError.
/// When expected_dim is given the vector dimension must match it.
Dataset load_dataset(const std::filesystem::path& vector_path,
                     const std::filesystem::path& meta_path,
                     std::optional<std::uint32_t> expected_dim = std::nullopt);
Dataset load_dataset(const std::filesystem::path& dir);

void write_dataset(const Dataset& d, const std::filesystem::path& vector_path,
                   const std::filesystem::path& meta_path);
void write_dataset(const Dataset& d, const std::filesystem::path& dir);

/// Lists every invariant violation; empty iff the dataset is fully valid
/// (including "every group has at least two sentences").
std::vector<Violation> validate(const Dataset& d);

/// Metadata line codec, exposed for tools that stream token records.
std::string token_to_json_line(const TokenRecord& t);
TokenRecord token_from_json_line(const std::string& line);

}  // namespace structmap
