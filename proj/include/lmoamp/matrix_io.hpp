#pragma once

#include <cstdint>
#include <filesystem>

#include "lmoamp/types.hpp"

namespace lmoamp {

// Binary container: four little-endian int64 header words
// {magic, rows, cols, flags} followed by rows*cols row-major doubles.
inline constexpr std::int64_t kMatrixMagic = 0x584d414f4d4c;  // "LMOAMX"
inline constexpr std::int64_t kFlagVector = 1;

void write_matrix_binary(const std::filesystem::path& path, const Matrix& m);
void write_vector_binary(const std::filesystem::path& path, const Vector& v);
Matrix read_matrix_binary(const std::filesystem::path& path);
/// Reads a container written as a vector (or any single-column matrix).
Vector read_vector_binary(const std::filesystem::path& path);

void write_matrix_csv(const std::filesystem::path& path, const Matrix& m);
Matrix read_matrix_csv(const std::filesystem::path& path);

}  // namespace lmoamp
