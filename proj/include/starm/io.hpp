#pragma once

// Binary on-disk formats.
//
// Tensor file ("STM1"): magic, three little-endian uint64 dims, then
// n1*n2*n3 little-endian doubles in storage order (slice-major,
// column-major within each slice), then an optional metadata block: a
// little-endian uint64 byte count followed by UTF-8 JSON.
//
// Matrix file ("STMM"): identical layout with dims (rows, cols, 1).
//
// Files are written atomically (temporary name, then rename) and round-trip
// bit-exactly.

#include <Eigen/Dense>

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "starm/tensor3.hpp"

namespace starm {

void write_tensor(const std::filesystem::path& path, const Tensor3d& tensor,
                  const nlohmann::json* metadata = nullptr);

Tensor3d read_tensor(const std::filesystem::path& path,
                     nlohmann::json* metadata = nullptr);

void write_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& m);

Eigen::MatrixXd read_matrix(const std::filesystem::path& path);

// Writes text atomically via a sibling temporary file.
void write_text_file(const std::filesystem::path& path, const std::string& text);

// Locale-independent shortest-faithful formatting with 17 significant digits.
std::string format_double(double value);

}  // namespace starm
