#include "lmoamp/matrix_io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "lmoamp/errors.hpp"

namespace lmoamp {

static_assert(std::endian::native == std::endian::little, "binary container assumes a little-endian host");

namespace {

void write_container(const std::filesystem::path& path, const Matrix& m, std::int64_t flags) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  const std::array<std::int64_t, 4> header{kMatrixMagic, std::int64_t(m.rows()), std::int64_t(m.cols()), flags};
  out.write(reinterpret_cast<const char*>(header.data()), sizeof(header));
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = m;
  out.write(reinterpret_cast<const char*>(rm.data()), std::streamsize(rm.size() * sizeof(double)));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

Matrix read_container(const std::filesystem::path& path, std::int64_t* flags) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::array<std::int64_t, 4> header{};
  in.read(reinterpret_cast<char*>(header.data()), sizeof(header));
  if (!in || header[0] != kMatrixMagic) throw DomainError(path.string() + ": not a matrix container");
  if (header[1] < 0 || header[2] < 0) throw DomainError(path.string() + ": negative dimensions");
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(header[1], header[2]);
  in.read(reinterpret_cast<char*>(rm.data()), std::streamsize(rm.size() * sizeof(double)));
  if (!in) throw DomainError(path.string() + ": truncated payload");
  if (flags) *flags = header[3];
  return rm;
}

}  // namespace

void write_matrix_binary(const std::filesystem::path& path, const Matrix& m) { write_container(path, m, 0); }

void write_vector_binary(const std::filesystem::path& path, const Vector& v) {
  write_container(path, Matrix(v), kFlagVector);
}

Matrix read_matrix_binary(const std::filesystem::path& path) { return read_container(path, nullptr); }

Vector read_vector_binary(const std::filesystem::path& path) {
  const Matrix m = read_container(path, nullptr);
  if (m.cols() != 1) throw DimensionError(path.string() + ": expected a single column");
  return m.col(0);
}

void write_matrix_csv(const std::filesystem::path& path, const Matrix& m) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  std::array<char, 64> buf{};
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      auto res = std::to_chars(buf.data(), buf.data() + buf.size(), m(i, j));
      out.write(buf.data(), res.ptr - buf.data());
    }
    out << '\n';
  }
}

Matrix read_matrix_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      double value = 0.0;
      auto res = std::from_chars(cell.data(), cell.data() + cell.size(), value);
      if (res.ec != std::errc()) throw DomainError(path.string() + ": bad number '" + cell + "'");
      row.push_back(value);
    }
    if (!rows.empty() && row.size() != rows.front().size()) throw DimensionError(path.string() + ": ragged rows");
    rows.push_back(std::move(row));
  }
  Matrix m(Index(rows.size()), rows.empty() ? 0 : Index(rows.front().size()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = rows[std::size_t(i)][std::size_t(j)];
  return m;
}

}  // namespace lmoamp
