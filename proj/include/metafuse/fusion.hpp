#pragma once

#include <string>
#include <vector>

#include "metafuse/feature_io.hpp"
#include "metafuse/matrix.hpp"
#include "metafuse/metadata_codec.hpp"

namespace metafuse {

struct ColumnSpan {
  std::size_t offset = 0;
  std::size_t width = 0;

  friend bool operator==(const ColumnSpan&, const ColumnSpan&) = default;
};

/// Design matrix [image features | encoded metadata], widened to double.
struct FusedMatrix {
  Matrix<double> data;
  std::vector<std::string> sample_ids;
  ColumnSpan image_span;
  ColumnSpan metadata_span;
  std::string extractor_name;
  std::vector<FieldSpan> metadata_fields;  // offsets relative to metadata_span

  std::size_t rows() const noexcept { return data.rows(); }
  std::size_t cols() const noexcept { return data.cols(); }
};

/// Concatenates image features and encoded metadata row by row.
/// `metadata_ids` must list the same sample ids in the same order as
/// `features.sample_ids`; the first disagreement raises AlignmentError.
FusedMatrix fuse(const FeatureMatrix& features, const EncodedMetadata& metadata,
                 const std::vector<std::string>& metadata_ids);

/// Image block only (zero-width metadata block).
FusedMatrix image_only(const FeatureMatrix& features);

}  // namespace metafuse
