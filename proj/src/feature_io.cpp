#include "metafuse/feature_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "binary.hpp"
#include "metafuse/csv.hpp"
#include "metafuse/error.hpp"
#include "metafuse/random.hpp"

namespace metafuse {

namespace binary {

std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed large payloads in chunks.
  constexpr std::size_t kChunk = 1u << 30;
  for (std::size_t off = 0; off < bytes.size(); off += kChunk) {
    const std::size_t len = std::min(kChunk, bytes.size() - off);
    crc = ::crc32(crc, bytes.data() + off, static_cast<uInt>(len));
  }
  return static_cast<std::uint32_t>(crc);
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  const auto size = static_cast<std::size_t>(in.tellg());
  std::vector<std::uint8_t> buf(size);
  in.seekg(0);
  if (size > 0 && !in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(size))) {
    throw IoError("failed reading '" + path.string() + "'");
  }
  return buf;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + tmp.string() + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
}

}  // namespace binary

void FeatureMatrix::validate() const {
  if (data.rows() == 0 || data.cols() == 0) throw DomainError("feature matrix must have N >= 1 and d >= 1");
  if (sample_ids.size() != data.rows()) {
    throw DomainError("feature matrix has " + std::to_string(data.rows()) + " rows but " +
                      std::to_string(sample_ids.size()) + " sample ids");
  }
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!std::isfinite(data.values()[i])) {
      throw NumericError("non-finite feature at row " + std::to_string(i / data.cols()) + ", column " +
                         std::to_string(i % data.cols()));
    }
  }
  std::unordered_set<std::string_view> seen;
  for (const auto& id : sample_ids) {
    if (!seen.insert(id).second) throw DomainError("duplicate sample id '" + id + "'");
  }
}

std::vector<std::uint8_t> serialize_features(const FeatureMatrix& m) {
  m.validate();
  binary::Writer w;
  w.raw(kFeatureMagic);
  w.uint<std::uint32_t>(kFeatureFormatVersion);
  w.uint<std::uint64_t>(m.rows());
  w.uint<std::uint64_t>(m.cols());
  w.string(m.extractor_name);
  for (const auto& id : m.sample_ids) w.string(id);
  const std::size_t payload_start = w.size();
  for (float v : m.data.values()) w.f32(v);
  const auto& buf = w.buffer();
  const auto crc = binary::crc32(std::span(buf).subspan(payload_start));
  w.uint<std::uint32_t>(crc);
  return w.buffer();
}

FeatureMatrix deserialize_features(std::span<const std::uint8_t> bytes, const std::string& context) {
  binary::Reader r(bytes, context);
  if (bytes.size() < kFeatureMagic.size() ||
      !std::equal(kFeatureMagic.begin(), kFeatureMagic.end(), bytes.begin())) {
    throw MagicMismatchError(context + ": not a feature file (magic mismatch)");
  }
  r.take(kFeatureMagic.size());
  const auto version = r.uint<std::uint32_t>();
  if (version != kFeatureFormatVersion) {
    throw VersionError(context + ": unsupported feature format version " + std::to_string(version));
  }
  const auto n = r.uint<std::uint64_t>();
  const auto d = r.uint<std::uint64_t>();
  if (n == 0 || d == 0) throw FormatError(context + ": zero-sized feature matrix");
  if (d > r.remaining() / 4 / n) throw TruncatedError(context + ": truncated (payload shorter than N x d)");

  FeatureMatrix m;
  m.extractor_name = r.string();
  m.sample_ids.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) m.sample_ids.push_back(r.string());

  const auto payload = r.take(n * d * 4);
  std::vector<float> values(n * d);
  binary::Reader pr(payload, context);
  for (auto& v : values) v = pr.f32();
  const auto stored_crc = r.uint<std::uint32_t>();
  if (r.remaining() != 0) throw FormatError(context + ": " + std::to_string(r.remaining()) + " trailing bytes");
  if (binary::crc32(payload) != stored_crc) throw ChecksumError(context + ": payload checksum mismatch");

  m.data = Matrix<float>(n, d, std::move(values));
  m.validate();
  return m;
}

void write_features(const FeatureMatrix& m, const std::filesystem::path& path) {
  binary::write_file(path, serialize_features(m));
}

FeatureMatrix read_features(const std::filesystem::path& path) {
  const auto bytes = binary::read_file(path);
  return deserialize_features(bytes, path.string());
}

FeatureMatrix read_features_csv(const std::filesystem::path& path, const std::string& extractor_name,
                                const std::string& id_column) {
  const csv::Table t = csv::read(path);
  const std::size_t id_col = t.column(id_column);
  const std::size_t d = t.header.size() - 1;
  FeatureMatrix m;
  m.extractor_name = extractor_name;
  m.data = Matrix<float>(t.rows.size(), d);
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    m.sample_ids.push_back(t.rows[r][id_col]);
    std::size_t c = 0;
    for (std::size_t j = 0; j < t.header.size(); ++j) {
      if (j == id_col) continue;
      const std::string& cell = t.rows[r][j];
      float v = 0.0f;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || ptr != cell.data() + cell.size()) {
        throw FormatError(path.string() + ": bad number '" + cell + "' at row " + std::to_string(r + 1));
      }
      m.data(r, c++) = v;
    }
  }
  m.validate();
  return m;
}

FeatureMatrix load_features(const std::filesystem::path& path, const std::string& extractor_name) {
  if (path.extension() == ".csv") {
    return read_features_csv(path, extractor_name.empty() ? path.stem().string() : extractor_name);
  }
  return read_features(path);
}

void LabelVector::validate() const {
  if (class_names.size() < 2) throw DomainError("need at least two classes");
  std::set<std::string_view> seen;
  for (const auto& c : class_names) {
    if (!seen.insert(c).second) throw DomainError("duplicate class name '" + c + "'");
  }
  const int k = static_cast<int>(class_names.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= k) {
      throw DomainError("label " + std::to_string(labels[i]) + " at index " + std::to_string(i) + " is outside [0, " +
                        std::to_string(k) + ")");
    }
  }
}

LabelSource load_labels_csv(const std::filesystem::path& path, const std::string& id_column,
                            const std::string& label_column,
                            const std::optional<std::vector<std::string>>& class_names) {
  const csv::Table t = csv::read(path);
  const std::size_t id_col = t.column(id_column);
  const std::size_t label_col = t.column(label_column);

  LabelSource out;
  if (class_names) {
    out.labels.class_names = *class_names;
  } else {
    std::set<std::string> names;
    for (const auto& row : t.rows) names.insert(row[label_col]);
    out.labels.class_names.assign(names.begin(), names.end());
  }
  std::map<std::string, int, std::less<>> index;
  for (std::size_t k = 0; k < out.labels.class_names.size(); ++k) {
    index.emplace(out.labels.class_names[k], static_cast<int>(k));
  }
  for (const auto& row : t.rows) {
    const auto it = index.find(row[label_col]);
    if (it == index.end()) throw ConfigError("unknown class label '" + row[label_col] + "' in " + path.string());
    out.sample_ids.push_back(row[id_col]);
    out.labels.labels.push_back(it->second);
  }
  std::unordered_set<std::string_view> seen;
  for (const auto& id : out.sample_ids) {
    if (!seen.insert(id).second) throw AlignmentError("duplicate sample id '" + id + "' in " + path.string());
  }
  out.labels.validate();
  return out;
}

std::vector<std::size_t> align_rows(const std::vector<std::string>& canonical_ids,
                                    const std::vector<std::string>& source_ids, std::string_view source_name) {
  std::unordered_map<std::string_view, std::size_t> where;
  where.reserve(source_ids.size());
  for (std::size_t i = 0; i < source_ids.size(); ++i) {
    if (!where.emplace(source_ids[i], i).second) {
      throw AlignmentError("duplicate sample id '" + source_ids[i] + "' in " + std::string(source_name));
    }
  }
  std::vector<std::size_t> order;
  order.reserve(canonical_ids.size());
  for (const auto& id : canonical_ids) {
    const auto it = where.find(id);
    if (it == where.end()) {
      throw AlignmentError("sample id '" + id + "' is missing from " + std::string(source_name));
    }
    order.push_back(it->second);
  }
  if (source_ids.size() != canonical_ids.size()) {
    std::unordered_set<std::string_view> canon(canonical_ids.begin(), canonical_ids.end());
    for (const auto& id : source_ids) {
      if (!canon.contains(id)) {
        throw AlignmentError("sample id '" + id + "' in " + std::string(source_name) + " has no label");
      }
    }
  }
  return order;
}

FeatureMatrix select_rows(const FeatureMatrix& m, const std::vector<std::size_t>& order) {
  FeatureMatrix out;
  out.extractor_name = m.extractor_name;
  out.data = Matrix<float>(order.size(), m.cols());
  out.sample_ids.reserve(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto src = m.data.row(order[i]);
    std::copy(src.begin(), src.end(), out.data.row(i).begin());
    out.sample_ids.push_back(m.sample_ids[order[i]]);
  }
  return out;
}

std::string SplitSpec::fingerprint() const {
  std::string buf = "n=" + std::to_string(size()) + ";train=";
  for (auto i : train_indices) buf += std::to_string(i) + ",";
  buf += ";test=";
  for (auto i : test_indices) buf += std::to_string(i) + ",";
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(fnv1a(buf)));
  return hex;
}

std::size_t train_count(std::size_t n, double fraction) {
  return static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
}

namespace {

void check_fraction(std::size_t n, double fraction) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw DomainError("train fraction must lie in (0, 1)");
  if (n < 2) throw DomainError("a split needs at least two samples");
  const std::size_t k = train_count(n, fraction);
  if (k == 0 || k >= n) {
    throw DomainError("degenerate split: fraction " + std::to_string(fraction) + " of " + std::to_string(n) +
                      " samples leaves an empty train or test set");
  }
}

void finish(SplitSpec& s) {
  std::sort(s.train_indices.begin(), s.train_indices.end());
  std::sort(s.test_indices.begin(), s.test_indices.end());
}

}  // namespace

SplitSpec fixed_split(std::size_t n, std::uint64_t seed, double fraction) {
  check_fraction(n, fraction);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(seed);
  shuffle(std::span(perm), rng);
  const std::size_t k = train_count(n, fraction);
  SplitSpec s;
  s.seed = seed;
  s.train_fraction = fraction;
  s.train_indices.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(k));
  s.test_indices.assign(perm.begin() + static_cast<std::ptrdiff_t>(k), perm.end());
  finish(s);
  return s;
}

SplitSpec stratified_split(const LabelVector& y, std::uint64_t seed, double fraction) {
  y.validate();
  const std::size_t n = y.labels.size();
  check_fraction(n, fraction);
  const std::size_t kclasses = y.num_classes();

  std::vector<std::vector<std::size_t>> members(kclasses);
  for (std::size_t i = 0; i < n; ++i) members[static_cast<std::size_t>(y.labels[i])].push_back(i);

  std::vector<std::size_t> quota(kclasses);
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < kclasses; ++c) {
    const double exact = fraction * static_cast<double>(members[c].size());
    quota[c] = static_cast<std::size_t>(std::floor(exact));
    assigned += quota[c];
    remainders.emplace_back(exact - static_cast<double>(quota[c]), c);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  const std::size_t target = train_count(n, fraction);
  for (std::size_t i = 0; assigned < target && i < remainders.size(); ++i) {
    const std::size_t c = remainders[i].second;
    if (quota[c] < members[c].size()) {
      ++quota[c];
      ++assigned;
    }
  }

  SplitSpec s;
  s.seed = seed;
  s.train_fraction = fraction;
  s.stratified = true;
  Rng rng(seed);
  for (std::size_t c = 0; c < kclasses; ++c) {
    shuffle(std::span(members[c]), rng);
    for (std::size_t i = 0; i < members[c].size(); ++i) {
      (i < quota[c] ? s.train_indices : s.test_indices).push_back(members[c][i]);
    }
  }
  finish(s);
  return s;
}

}  // namespace metafuse
