#include "rsub/common/tensor_file.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "rsub/common/error.hpp"
#include "rsub/common/seed.hpp"

namespace rsub {
namespace {

static_assert(std::endian::native == std::endian::little, "little-endian host required");

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + at_, sizeof(T));
    at_ += sizeof(T);
    return v;
  }
  std::string_view take(std::size_t n) {
    need(n);
    auto s = bytes_.substr(at_, n);
    at_ += n;
    return s;
  }
  std::size_t remaining() const { return bytes_.size() - at_; }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - at_ < n) {
      fail(ErrorKind::kFormatTruncated, "file truncated at byte " + std::to_string(at_));
    }
  }
  std::string_view bytes_;
  std::size_t at_ = 0;
};

}  // namespace

std::string TensorFile::serialize() const {
  std::string out = "RSUB";
  put<std::uint8_t>(out, kVersion);
  const std::string h = header.dump();
  put<std::uint32_t>(out, static_cast<std::uint32_t>(h.size()));
  out += h;
  put<std::uint32_t>(out, static_cast<std::uint32_t>(sections.size()));
  for (const auto& [name, t] : sections) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.shape().size()));
    for (std::size_t e : t.shape()) put<std::uint64_t>(out, e);
    out.append(reinterpret_cast<const char*>(t.data()), t.size() * sizeof(float));
  }
  put<std::uint64_t>(out, fnv1a64(out));
  return out;
}

TensorFile TensorFile::parse(std::string_view bytes) {
  if (bytes.size() < 5 || bytes.substr(0, 4) != "RSUB") {
    fail(ErrorKind::kFormatVersion, "not an RSUB file (bad magic)");
  }
  if (static_cast<std::uint8_t>(bytes[4]) != kVersion) {
    fail(ErrorKind::kFormatVersion,
         "unsupported format version " + std::to_string(static_cast<unsigned>(bytes[4])));
  }
  if (bytes.size() < 13) fail(ErrorKind::kFormatTruncated, "file truncated");
  const auto body = bytes.substr(0, bytes.size() - 8);
  std::uint64_t stored;
  std::memcpy(&stored, bytes.data() + body.size(), 8);

  Reader r(body);
  r.take(5);
  TensorFile f;
  try {
    const auto hlen = r.get<std::uint32_t>();
    const auto htext = r.take(hlen);
    const auto count = r.get<std::uint32_t>();
    for (std::uint32_t s = 0; s < count; ++s) {
      std::string name(r.take(r.get<std::uint32_t>()));
      const auto rank = r.get<std::uint32_t>();
      if (rank == 0 || rank > 8) fail(ErrorKind::kFormatShape, "bad rank for section " + name);
      std::vector<std::size_t> shape(rank);
      std::size_t n = 1;
      for (auto& e : shape) {
        e = static_cast<std::size_t>(r.get<std::uint64_t>());
        n *= e;
      }
      if (n > r.remaining() / sizeof(float)) {
        fail(ErrorKind::kFormatTruncated, "section " + name + " runs past end of file");
      }
      std::vector<float> data(n);
      const auto raw = r.take(n * sizeof(float));
      if (n) std::memcpy(data.data(), raw.data(), raw.size());
      f.sections.emplace_back(std::move(name), Tensor(std::move(shape), std::move(data)));
    }
    if (fnv1a64(body) != stored) fail(ErrorKind::kFormatChecksum, "checksum mismatch");
    if (r.remaining() != 0) fail(ErrorKind::kFormatChecksum, "trailing bytes before checksum");
    f.header = nlohmann::json::parse(htext);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kFormatChecksum, std::string("corrupt header: ") + e.what());
  }
  return f;
}

const Tensor& TensorFile::section(const std::string& name) const {
  for (const auto& [n, t] : sections) {
    if (n == name) return t;
  }
  fail(ErrorKind::kFormatShape, "missing section '" + name + "'");
}

void TensorFile::save(const std::filesystem::path& path) const {
  write_file_atomic(path, serialize());
}

TensorFile TensorFile::load(const std::filesystem::path& path) { return parse(read_file(path)); }

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::kIo, "cannot write " + tmp);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorKind::kIo, "write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(ErrorKind::kIo, "cannot rename " + tmp + " to " + path.string() + ": " + ec.message());
}

}  // namespace rsub
