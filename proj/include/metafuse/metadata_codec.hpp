#pragma once

// Element-wise ASCII-decimal encoding of tabular metadata.
//
// Each field gets a fixed width equal to the longest value observed in that
// field over the whole table. Present values are right-padded with spaces to
// that width and mapped byte-for-byte to their ASCII codes; missing values
// (absent or empty cells) become a run of zeros.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "metafuse/matrix.hpp"

namespace metafuse {

struct MetadataTable {
  std::vector<std::string> field_names;
  /// records[row][field]; nullopt marks a missing entry.
  std::vector<std::vector<std::optional<std::string>>> records;

  std::size_t rows() const noexcept { return records.size(); }
  std::size_t fields() const noexcept { return field_names.size(); }

  /// Throws ConfigError on duplicate/empty field names or ragged rows.
  void validate() const;

  friend bool operator==(const MetadataTable&, const MetadataTable&) = default;
};

struct FieldSpan {
  std::string name;
  std::size_t offset = 0;
  std::size_t width = 0;

  friend bool operator==(const FieldSpan&, const FieldSpan&) = default;
};

struct EncodedMetadata {
  Matrix<std::uint8_t> values;  // N x d_K', entries in [0, 127]
  std::vector<FieldSpan> spans;

  std::size_t width() const noexcept { return values.cols(); }
};

/// Throws DomainError on an empty table and EncodingError on any byte
/// outside 1..127 (NUL is reserved for the missing marker).
EncodedMetadata encode_table(const MetadataTable& table);

/// Inverse of encode_table up to trailing-space padding. All-zero spans
/// decode to missing. Throws FormatError when spans do not tile the columns.
MetadataTable decode_table(const EncodedMetadata& enc, const std::vector<std::string>& field_names);

/// Metadata rows keyed by sample id, loaded from a CSV file.
struct MetadataSource {
  std::vector<std::string> sample_ids;
  MetadataTable table;
};

/// Reads `fields` (in that order) plus `id_column` from a CSV. Empty cells are missing.
MetadataSource load_metadata_csv(const std::filesystem::path& path, const std::string& id_column,
                                 const std::vector<std::string>& fields);

/// Right-trims spaces from every present value; empty results become missing.
MetadataTable right_trimmed(MetadataTable table);

}  // namespace metafuse
