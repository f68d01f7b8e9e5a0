#include "metafuse/metadata_codec.hpp"

#include <algorithm>
#include <set>

#include "metafuse/csv.hpp"
#include "metafuse/error.hpp"

namespace metafuse {
namespace {

constexpr std::uint8_t kPad = 32;

bool is_missing(const std::optional<std::string>& v) { return !v.has_value() || v->empty(); }

}  // namespace

void MetadataTable::validate() const {
  std::set<std::string> seen;
  for (const auto& name : field_names) {
    if (name.empty()) throw ConfigError("metadata field name must be non-empty");
    if (!seen.insert(name).second) throw ConfigError("duplicate metadata field '" + name + "'");
  }
  for (std::size_t r = 0; r < records.size(); ++r) {
    if (records[r].size() != field_names.size()) {
      throw ConfigError("metadata row " + std::to_string(r) + " has " + std::to_string(records[r].size()) +
                        " entries, expected " + std::to_string(field_names.size()));
    }
  }
}

EncodedMetadata encode_table(const MetadataTable& table) {
  if (table.rows() == 0) throw DomainError("cannot encode an empty metadata table");
  table.validate();

  const std::size_t n = table.rows();
  const std::size_t f = table.fields();

  std::vector<FieldSpan> spans(f);
  std::size_t offset = 0;
  for (std::size_t j = 0; j < f; ++j) {
    std::size_t width = 1;
    for (std::size_t r = 0; r < n; ++r) {
      const auto& v = table.records[r][j];
      if (!is_missing(v)) width = std::max(width, v->size());
    }
    spans[j] = {table.field_names[j], offset, width};
    offset += width;
  }

  EncodedMetadata enc{Matrix<std::uint8_t>(n, offset, 0), std::move(spans)};
  for (std::size_t r = 0; r < n; ++r) {
    auto row = enc.values.row(r);
    for (std::size_t j = 0; j < f; ++j) {
      const auto& v = table.records[r][j];
      if (is_missing(v)) continue;
      const FieldSpan& span = enc.spans[j];
      for (std::size_t k = 0; k < span.width; ++k) {
        std::uint8_t code = kPad;
        if (k < v->size()) {
          const auto byte = static_cast<unsigned char>((*v)[k]);
          if (byte == 0 || byte > 127) {
            throw EncodingError("non-ASCII byte " + std::to_string(byte) + " in row " + std::to_string(r) +
                                    ", field '" + span.name + "'",
                                r, span.name, byte);
          }
          code = byte;
        }
        row[span.offset + k] = code;
      }
    }
  }
  return enc;
}

MetadataTable decode_table(const EncodedMetadata& enc, const std::vector<std::string>& field_names) {
  if (field_names.size() != enc.spans.size()) {
    throw FormatError("decode: " + std::to_string(field_names.size()) + " field names for " +
                      std::to_string(enc.spans.size()) + " spans");
  }
  std::size_t expected = 0;
  for (const auto& span : enc.spans) {
    if (span.offset != expected || span.width == 0) throw FormatError("decode: field spans are misaligned");
    expected += span.width;
  }
  if (expected != enc.values.cols()) throw FormatError("decode: spans do not cover the encoded columns");

  MetadataTable out;
  out.field_names = field_names;
  out.records.reserve(enc.values.rows());
  for (std::size_t r = 0; r < enc.values.rows(); ++r) {
    const auto row = enc.values.row(r);
    std::vector<std::optional<std::string>> rec;
    rec.reserve(enc.spans.size());
    for (const auto& span : enc.spans) {
      const auto cells = row.subspan(span.offset, span.width);
      if (std::all_of(cells.begin(), cells.end(), [](std::uint8_t c) { return c == 0; })) {
        rec.emplace_back(std::nullopt);
        continue;
      }
      std::string value;
      value.reserve(span.width);
      for (std::uint8_t c : cells) {
        if (c == 0 || c > 127) throw FormatError("decode: invalid code " + std::to_string(c) + " in a present value");
        value.push_back(static_cast<char>(c));
      }
      while (!value.empty() && value.back() == ' ') value.pop_back();
      rec.emplace_back(value.empty() ? std::nullopt : std::optional<std::string>(std::move(value)));
    }
    out.records.push_back(std::move(rec));
  }
  return out;
}

MetadataSource load_metadata_csv(const std::filesystem::path& path, const std::string& id_column,
                                 const std::vector<std::string>& fields) {
  const csv::Table csv = csv::read(path);
  const std::size_t id_col = csv.column(id_column);
  std::vector<std::size_t> cols;
  cols.reserve(fields.size());
  for (const auto& f : fields) cols.push_back(csv.column(f));

  MetadataSource src;
  src.table.field_names = fields;
  src.sample_ids.reserve(csv.rows.size());
  src.table.records.reserve(csv.rows.size());
  for (const auto& row : csv.rows) {
    src.sample_ids.push_back(row[id_col]);
    std::vector<std::optional<std::string>> rec;
    rec.reserve(cols.size());
    for (std::size_t c : cols) {
      rec.emplace_back(row[c].empty() ? std::nullopt : std::optional<std::string>(row[c]));
    }
    src.table.records.push_back(std::move(rec));
  }
  src.table.validate();
  return src;
}

MetadataTable right_trimmed(MetadataTable table) {
  for (auto& rec : table.records) {
    for (auto& v : rec) {
      if (!v) continue;
      while (!v->empty() && v->back() == ' ') v->pop_back();
      if (v->empty()) v.reset();
    }
  }
  return table;
}

}  // namespace metafuse
