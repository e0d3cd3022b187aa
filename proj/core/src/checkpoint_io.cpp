#include "kga/checkpoint_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

#include "kga/error.hpp"

namespace kga {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

const Matrix& MatrixArchive::get(const std::string& name) const {
  for (const auto& m : matrices) {
    if (m.name == name) return m.value;
  }
  throw FormatError("checkpoint has no matrix named '" + name + "'");
}

bool MatrixArchive::has(const std::string& name) const {
  for (const auto& m : matrices) {
    if (m.name == name) return true;
  }
  return false;
}

namespace {

constexpr std::array<char, 4> kMagic = {'K', 'G', 'A', '1'};

template <typename T>
void put(std::string& buf, T value) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  buf.append(bytes, sizeof(T));
}

class Reader {
 public:
  Reader(const std::string& data, const std::filesystem::path& path) : data_(data), path_(path) {}

  template <typename T>
  T take() {
    need(sizeof(T));
    T value;
    std::memcpy(&value, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  std::string take_bytes(std::size_t n) {
    need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) throw FormatError("truncated checkpoint '" + path_.string() + "'");
  }

  const std::string& data_;
  std::filesystem::path path_;
  std::size_t pos_ = 0;
};

bool known_kind(std::uint8_t k) {
  return k == 0 || k == 1 || k == 2 || k == static_cast<std::uint8_t>(CheckpointKind::Alignment);
}

}  // namespace

void write_archive(const MatrixArchive& archive, const std::filesystem::path& path) {
  std::string buf(kMagic.begin(), kMagic.end());
  put<std::uint16_t>(buf, kCheckpointVersion);
  put<std::uint8_t>(buf, static_cast<std::uint8_t>(archive.kind));
  for (const auto& m : archive.matrices) {
    if (m.name.size() > std::numeric_limits<std::uint16_t>::max()) {
      throw FormatError("matrix name too long: " + m.name.substr(0, 32));
    }
    put<std::uint16_t>(buf, static_cast<std::uint16_t>(m.name.size()));
    buf += m.name;
    put<std::uint32_t>(buf, static_cast<std::uint32_t>(m.value.rows()));
    put<std::uint32_t>(buf, static_cast<std::uint32_t>(m.value.cols()));
    for (Eigen::Index i = 0; i < m.value.size(); ++i) {
      put<float>(buf, static_cast<float>(m.value.data()[i]));
    }
  }

  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + tmp.string() + "'");
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw IoError("failed writing '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move checkpoint into place at '" + path.string() + "': " + ec.message());
}

MatrixArchive read_archive(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  const std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  Reader r(data, path);

  const auto magic = r.take_bytes(4);
  if (!std::equal(magic.begin(), magic.end(), kMagic.begin())) {
    throw FormatError("'" + path.string() + "' is not a KGA1 checkpoint");
  }
  const auto version = r.take<std::uint16_t>();
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto kind = r.take<std::uint8_t>();
  if (!known_kind(kind)) throw FormatError("unknown checkpoint kind " + std::to_string(kind));

  MatrixArchive archive;
  archive.kind = static_cast<CheckpointKind>(kind);
  while (!r.done()) {
    const auto len = r.take<std::uint16_t>();
    NamedMatrix m;
    m.name = r.take_bytes(len);
    const auto rows = r.take<std::uint32_t>();
    const auto cols = r.take<std::uint32_t>();
    const auto count = static_cast<std::uint64_t>(rows) * cols;
    if (count * sizeof(float) > data.size()) throw FormatError("truncated checkpoint '" + path.string() + "'");
    m.value.resize(rows, cols);
    for (std::uint64_t i = 0; i < count; ++i) m.value.data()[i] = r.take<float>();
    archive.matrices.push_back(std::move(m));
  }
  return archive;
}

}  // namespace kga
