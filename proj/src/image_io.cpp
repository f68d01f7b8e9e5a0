#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "metafuse/augmentation.hpp"
#include "metafuse/error.hpp"

namespace metafuse {

Image load_image(const std::filesystem::path& path) {
  const cv::Mat raw = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (raw.empty()) throw IoError("cannot read image '" + path.string() + "'");
  if (raw.depth() != CV_8U) throw FormatError("image '" + path.string() + "' is not 8-bit");

  const int src_channels = raw.channels();
  const std::size_t channels = src_channels == 1 ? 1 : 3;
  Image img(static_cast<std::size_t>(raw.rows), static_cast<std::size_t>(raw.cols), channels);
  for (int r = 0; r < raw.rows; ++r) {
    const std::uint8_t* row = raw.ptr<std::uint8_t>(r);
    for (int c = 0; c < raw.cols; ++c) {
      const std::uint8_t* px = row + static_cast<std::ptrdiff_t>(c) * src_channels;
      const auto rr = static_cast<std::size_t>(r);
      const auto cc = static_cast<std::size_t>(c);
      if (channels == 1) {
        img.at(rr, cc, 0) = px[0];
      } else if (src_channels == 2) {
        img.at(rr, cc, 0) = img.at(rr, cc, 1) = img.at(rr, cc, 2) = px[0];
      } else {
        // OpenCV stores BGR(A).
        img.at(rr, cc, 0) = px[2];
        img.at(rr, cc, 1) = px[1];
        img.at(rr, cc, 2) = px[0];
      }
    }
  }
  return img;
}

void save_image(const Image& img, const std::filesystem::path& path) {
  img.validate();
  const int type = img.channels == 1 ? CV_8UC1 : CV_8UC3;
  cv::Mat mat(static_cast<int>(img.height), static_cast<int>(img.width), type);
  for (std::size_t r = 0; r < img.height; ++r) {
    std::uint8_t* row = mat.ptr<std::uint8_t>(static_cast<int>(r));
    for (std::size_t c = 0; c < img.width; ++c) {
      if (img.channels == 1) {
        row[c] = img.at(r, c, 0);
      } else {
        row[3 * c + 0] = img.at(r, c, 2);
        row[3 * c + 1] = img.at(r, c, 1);
        row[3 * c + 2] = img.at(r, c, 0);
      }
    }
  }
  if (!cv::imwrite(path.string(), mat)) throw IoError("cannot write image '" + path.string() + "'");
}

}  // namespace metafuse
