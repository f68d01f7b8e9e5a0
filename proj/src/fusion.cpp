#include "metafuse/fusion.hpp"

#include <algorithm>

#include "metafuse/error.hpp"

namespace metafuse {

FusedMatrix fuse(const FeatureMatrix& features, const EncodedMetadata& metadata,
                 const std::vector<std::string>& metadata_ids) {
  const std::size_t n = features.rows();
  if (metadata.values.rows() != n || metadata_ids.size() != n) {
    throw AlignmentError("fuse: feature matrix has " + std::to_string(n) + " rows, metadata has " +
                         std::to_string(metadata.values.rows()) + " rows and " + std::to_string(metadata_ids.size()) +
                         " ids");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (features.sample_ids[i] != metadata_ids[i]) {
      throw AlignmentError("fuse: row " + std::to_string(i) + " has image id '" + features.sample_ids[i] +
                           "' but metadata id '" + metadata_ids[i] + "'");
    }
  }

  const std::size_t dk = features.cols();
  const std::size_t dm = metadata.width();
  FusedMatrix h;
  h.data = Matrix<double>(n, dk + dm);
  h.sample_ids = features.sample_ids;
  h.image_span = {0, dk};
  h.metadata_span = {dk, dm};
  h.extractor_name = features.extractor_name;
  h.metadata_fields = metadata.spans;

  for (std::size_t i = 0; i < n; ++i) {
    auto out = h.data.row(i);
    const auto img = features.data.row(i);
    std::copy(img.begin(), img.end(), out.begin());
    const auto meta = metadata.values.row(i);
    std::copy(meta.begin(), meta.end(), out.begin() + static_cast<std::ptrdiff_t>(dk));
  }
  return h;
}

FusedMatrix image_only(const FeatureMatrix& features) {
  const std::size_t n = features.rows();
  const std::size_t dk = features.cols();
  FusedMatrix h;
  h.data = Matrix<double>(n, dk);
  h.sample_ids = features.sample_ids;
  h.image_span = {0, dk};
  h.metadata_span = {dk, 0};
  h.extractor_name = features.extractor_name;
  const auto src = features.data.values();
  std::copy(src.begin(), src.end(), h.data.values().begin());
  return h;
}

}  // namespace metafuse
