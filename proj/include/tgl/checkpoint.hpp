#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "tgl/matrix.hpp"

namespace tgl::nn {

// Versioned text archive of named matrices plus one free-form header line
// (models store their family and configuration there). Values are written
// in shortest round-trip form, so save followed by load reproduces every
// double bit for bit.
struct Archive {
  std::string header;
  std::vector<std::pair<std::string, Matrix>> params;
};

void save_archive(const std::filesystem::path& path, const Archive& archive);
Archive load_archive(const std::filesystem::path& path);

}  // namespace tgl::nn
