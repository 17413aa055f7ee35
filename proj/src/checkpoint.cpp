#include "tgl/checkpoint.hpp"

#include "io_util.hpp"

namespace tgl::nn {

namespace {
constexpr std::string_view kMagic = "tgl-checkpoint 1";
}

void save_archive(const std::filesystem::path& path, const Archive& archive) {
  if (archive.header.find('\n') != std::string::npos)
    fail(Errc::config_error, "archive header must be a single line");
  std::string out;
  out += kMagic;
  out += '\n';
  out += "header ";
  out += archive.header;
  out += '\n';
  for (const auto& [name, m] : archive.params) {
    if (name.empty() || name.find_first_of(" \t\n\r") != std::string::npos)
      fail(Errc::config_error, "archive parameter name '" + name +
                                   "' must be non-empty without whitespace");
    out += "param " + name + ' ' + std::to_string(m.rows()) + ' ' +
           std::to_string(m.cols()) + '\n';
    for (int i = 0; i < m.rows(); ++i) {
      for (int j = 0; j < m.cols(); ++j) {
        if (j > 0) out += ' ';
        out += detail::fmt_double(m(i, j));
      }
      out += '\n';
    }
  }
  detail::write_file(path, out);
}

Archive load_archive(const std::filesystem::path& path) {
  std::string text = detail::read_file(path);
  auto lines = detail::split_lines(text);
  if (lines.empty() || lines[0] != kMagic)
    fail(Errc::schema_mismatch,
         "not a recognized checkpoint: " + path.string());
  if (lines.size() < 2 || lines[1].substr(0, 7) != "header ")
    fail(Errc::parse_error, "checkpoint missing header line");
  Archive archive;
  archive.header = std::string(lines[1].substr(7));
  std::size_t i = 2;
  while (i < lines.size()) {
    auto fields = detail::split(lines[i], ' ');
    if (fields.size() != 4 || fields[0] != "param")
      fail(Errc::parse_error,
           "checkpoint line " + std::to_string(i + 1) + ": expected param record");
    std::string name(fields[1]);
    int rows = static_cast<int>(detail::parse_int(fields[2], "checkpoint rows"));
    int cols = static_cast<int>(detail::parse_int(fields[3], "checkpoint cols"));
    if (rows < 0 || cols < 0 ||
        i + 1 + static_cast<std::size_t>(rows) > lines.size())
      fail(Errc::parse_error, "checkpoint truncated inside '" + name + "'");
    Matrix m(rows, cols);
    for (int r = 0; r < rows; ++r) {
      auto values = detail::split(lines[i + 1 + r], ' ');
      if (static_cast<int>(values.size()) != cols)
        fail(Errc::parse_error, "checkpoint row width mismatch in '" + name + "'");
      for (int c = 0; c < cols; ++c)
        m(r, c) = detail::parse_double(values[c], "checkpoint value");
    }
    for (const auto& [existing, _] : archive.params)
      if (existing == name)
        fail(Errc::parse_error, "checkpoint repeats parameter '" + name + "'");
    archive.params.emplace_back(std::move(name), std::move(m));
    i += 1 + rows;
  }
  return archive;
}

}  // namespace tgl::nn
