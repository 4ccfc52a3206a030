#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"

#include "beyondwords/linalg.hpp"

namespace beyondwords {

/// Writes `<base>.json` (shape and layout metadata merged with `extra`) and
/// `<base>.bin` holding rows*cols little-endian float32 values in row-major
/// order.
void write_matrix(const std::filesystem::path& base, const MatrixXd& m,
                  const nlohmann::json& extra = nlohmann::json::object());

struct StoredMatrix {
  MatrixXd values;
  nlohmann::json meta;
};

StoredMatrix read_matrix(const std::filesystem::path& base);

/// Raw float32 little-endian row-major blob helpers.
void write_f32(const std::filesystem::path& file, const MatrixXd& m);
MatrixXd read_f32(const std::filesystem::path& file, Eigen::Index rows, Eigen::Index cols);

nlohmann::json read_json(const std::filesystem::path& file);
/// Pretty-printed with a trailing newline.
void write_json(const std::filesystem::path& file, const nlohmann::json& j);
void write_text(const std::filesystem::path& file, const std::string& text);
std::string read_text(const std::filesystem::path& file);

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& file);

}  // namespace beyondwords
