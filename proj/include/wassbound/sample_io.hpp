#pragma once

#include <filesystem>
#include <stdexcept>

#include "wassbound/common.hpp"

namespace wassbound {

/// Malformed or unreadable sample data.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Binary layout: the 8 bytes "WBSAMPLE", then version (1), n and d as
/// unsigned 64-bit little-endian integers, then n * d little-endian doubles
/// in row-major order.
/// Writers reject empty or non-finite matrices.
RowMatrix read_samples_binary(const std::filesystem::path& path);
void write_samples_binary(const std::filesystem::path& path, const RowMatrix& samples);

/// One sample per line, comma separated. A first line that is not fully
/// numeric is treated as a header. Values are written in shortest
/// round-trip form, so binary -> CSV -> binary is lossless.
RowMatrix read_samples_csv(const std::filesystem::path& path);
void write_samples_csv(const std::filesystem::path& path, const RowMatrix& samples);

/// Reads either format, detected by the magic bytes.
RowMatrix read_samples(const std::filesystem::path& path);

}  // namespace wassbound
