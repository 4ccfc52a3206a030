#include "beyondwords/matrix_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <openssl/evp.h>

#include "beyondwords/errors.hpp"

namespace beyondwords {

namespace fs = std::filesystem;
using json = nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "float32 artifacts are written in native order; big-endian hosts need a byte swap");

void write_f32(const fs::path& file, const MatrixXd& m) {
  std::vector<float> buf(static_cast<std::size_t>(m.size()));
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) buf[k++] = static_cast<float>(m(i, j));
  }
  std::ofstream out(file, std::ios::binary);
  if (!out) throw Error("cannot write " + file.string());
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
}

MatrixXd read_f32(const fs::path& file, Eigen::Index rows, Eigen::Index cols) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw StageError("missing artifact " + file.string());
  std::vector<float> buf(static_cast<std::size_t>(rows * cols));
  in.read(reinterpret_cast<char*>(buf.data()),
          static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (in.gcount() != static_cast<std::streamsize>(buf.size() * sizeof(float))) {
    throw StageError("truncated float32 blob " + file.string());
  }
  MatrixXd m(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = buf[k++];
  }
  return m;
}

void write_matrix(const fs::path& base, const MatrixXd& m, const json& extra) {
  json meta = extra;
  meta["n"] = m.rows();
  meta["d"] = m.cols();
  meta["dtype"] = "f32";
  meta["layout"] = "row-major";
  meta["endianness"] = "little";
  write_json(fs::path(base.string() + ".json"), meta);
  write_f32(fs::path(base.string() + ".bin"), m);
}

StoredMatrix read_matrix(const fs::path& base) {
  StoredMatrix s;
  s.meta = read_json(fs::path(base.string() + ".json"));
  if (s.meta.value("dtype", "") != "f32" || s.meta.value("layout", "") != "row-major") {
    throw StageError("unsupported matrix encoding in " + base.string() + ".json");
  }
  s.values = read_f32(fs::path(base.string() + ".bin"), s.meta.at("n").get<Eigen::Index>(),
                      s.meta.at("d").get<Eigen::Index>());
  return s;
}

json read_json(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw StageError("missing artifact " + file.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw StageError("corrupt JSON in " + file.string() + ": " + e.what());
  }
}

void write_json(const fs::path& file, const json& j) { write_text(file, j.dump(2) + "\n"); }

void write_text(const fs::path& file, const std::string& text) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary);
  if (!out) throw Error("cannot write " + file.string());
  out << text;
}

std::string read_text(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw StageError("missing artifact " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string sha256_hex(const std::string& bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr);
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xF]);
  }
  return out;
}

std::string sha256_file(const fs::path& file) { return sha256_hex(read_text(file)); }

}  // namespace beyondwords
