#include "wassbound/sample_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace wassbound {
namespace {

constexpr std::array<char, 8> kMagic = {'W', 'B', 'S', 'A', 'M', 'P', 'L', 'E'};
constexpr std::uint64_t kVersion = 1;

template <class T>
T to_little_endian(T value) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(value);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  }
  return value;
}

template <class T>
void put(std::ofstream& out, T value) {
  value = to_little_endian(value);
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
T get(std::ifstream& in, const std::filesystem::path& path) {
  T value;
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) {
    throw DataError(path.string() + ": truncated sample file");
  }
  return to_little_endian(value);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool parse_row(std::string_view line, std::vector<double>& out) {
  out.clear();
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    std::string_view field = trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start));
    if (field.size() >= 2 && field.front() == '"' && field.back() == '"') field = field.substr(1, field.size() - 2);
    if (!field.empty() && field.front() == '+') field.remove_prefix(1);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (field.empty() || ec != std::errc() || ptr != field.data() + field.size()) return false;
    out.push_back(value);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return true;
}

void check_output(const std::ofstream& out, const std::filesystem::path& path) {
  if (!out) throw DataError(path.string() + ": write failed");
}

void check_writable(const RowMatrix& samples, const std::filesystem::path& path) {
  if (samples.rows() == 0 || samples.cols() == 0) throw DataError(path.string() + ": refusing to write an empty matrix");
  if (!samples.allFinite()) throw DataError(path.string() + ": refusing to write non-finite values");
}

}  // namespace

RowMatrix read_samples_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path.string() + ": cannot open");
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw DataError(path.string() + ": not a wassbound sample file (bad magic)");
  }
  const auto version = get<std::uint64_t>(in, path);
  if (version != kVersion) throw DataError(path.string() + ": unsupported version " + std::to_string(version));
  const auto n = get<std::uint64_t>(in, path);
  const auto d = get<std::uint64_t>(in, path);
  if (n == 0 || d == 0) throw DataError(path.string() + ": empty sample matrix");
  if (n > (std::uint64_t{1} << 40) / d) throw DataError(path.string() + ": implausible dimensions");
  RowMatrix m(static_cast<Index>(n), static_cast<Index>(d));
  for (Index i = 0; i < m.size(); ++i) {
    const auto bits = get<std::uint64_t>(in, path);
    m.data()[i] = std::bit_cast<double>(bits);
  }
  if (in.peek() != std::char_traits<char>::eof()) throw DataError(path.string() + ": trailing bytes");
  if (!m.allFinite()) throw DataError(path.string() + ": non-finite value");
  return m;
}

void write_samples_binary(const std::filesystem::path& path, const RowMatrix& samples) {
  check_writable(samples, path);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(path.string() + ": cannot open for writing");
  out.write(kMagic.data(), kMagic.size());
  put<std::uint64_t>(out, kVersion);
  put<std::uint64_t>(out, static_cast<std::uint64_t>(samples.rows()));
  put<std::uint64_t>(out, static_cast<std::uint64_t>(samples.cols()));
  for (Index i = 0; i < samples.size(); ++i) put<std::uint64_t>(out, std::bit_cast<std::uint64_t>(samples.data()[i]));
  check_output(out, path);
}

RowMatrix read_samples_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(path.string() + ": cannot open");
  std::vector<double> values;
  std::vector<double> row;
  Index cols = -1;
  Index rows = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    if (!parse_row(line, row)) {
      if (line_no == 1) continue;  // header
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": non-numeric field");
    }
    if (cols < 0) cols = static_cast<Index>(row.size());
    if (static_cast<Index>(row.size()) != cols) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected " + std::to_string(cols) +
                      " fields, found " + std::to_string(row.size()));
    }
    values.insert(values.end(), row.begin(), row.end());
    ++rows;
  }
  if (rows == 0) throw DataError(path.string() + ": no samples");
  RowMatrix m = Eigen::Map<RowMatrix>(values.data(), rows, cols);
  if (!m.allFinite()) throw DataError(path.string() + ": non-finite value");
  return m;
}

void write_samples_csv(const std::filesystem::path& path, const RowMatrix& samples) {
  check_writable(samples, path);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError(path.string() + ": cannot open for writing");
  std::array<char, 32> buf{};
  for (Index i = 0; i < samples.rows(); ++i) {
    for (Index j = 0; j < samples.cols(); ++j) {
      if (j) out << ',';
      const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), samples(i, j));
      out.write(buf.data(), res.ptr - buf.data());
    }
    out << '\n';
  }
  check_output(out, path);
}

RowMatrix read_samples(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path.string() + ": cannot open");
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (in.gcount() == static_cast<std::streamsize>(magic.size()) && magic == kMagic) return read_samples_binary(path);
  return read_samples_csv(path);
}

}  // namespace wassbound
