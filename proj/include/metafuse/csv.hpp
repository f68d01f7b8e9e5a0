#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace metafuse::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index of `name`; throws FormatError when absent.
  std::size_t column(std::string_view name) const;
};

/// RFC 4180 parsing: quoted fields, doubled quotes, CRLF or LF line ends.
/// Rows shorter or longer than the header are a FormatError.
Table parse(std::string_view text);
Table read(const std::filesystem::path& path);

std::string escape(std::string_view field);

}  // namespace metafuse::csv
