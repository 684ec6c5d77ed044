#include "gaitmtl/weights_io.hpp"

#include <bit>
#include <cstring>

#include "gaitmtl/errors.hpp"

namespace gaitmtl {

namespace {

constexpr std::string_view kMagic = "GMTW";

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::string_view take(std::size_t n) {
    if (bytes_.size() - pos_ < n) fail(Errc::kCorruptFile, "weight file truncated");
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::uint64_t uint(int width) {
    const auto s = take(static_cast<std::size_t>(width));
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(s[static_cast<std::size_t>(i)]))
           << (8 * i);
    }
    return v;
  }
  std::uint32_t u32() { return static_cast<std::uint32_t>(uint(4)); }
  std::uint64_t u64() { return uint(8); }
  bool done() const { return pos_ == bytes_.size(); }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

const WeightEntry* WeightFile::find(std::string_view name) const {
  for (const auto& e : entries) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

std::string encode_weights(const WeightFile& file) {
  std::string out;
  out.append(kMagic);
  put_u32(out, kWeightFormatVersion);
  put_u64(out, file.fingerprint);
  put_u32(out, static_cast<std::uint32_t>(file.spec_json.size()));
  out.append(file.spec_json);
  put_u32(out, static_cast<std::uint32_t>(file.entries.size()));
  for (const auto& e : file.entries) {
    if (nn::shape_size(e.shape) != e.values.size()) {
      fail(Errc::kShapeError, "weight entry " + e.name + " has inconsistent shape");
    }
    put_u32(out, static_cast<std::uint32_t>(e.name.size()));
    out.append(e.name);
    out.push_back(e.trainable ? '\1' : '\0');
    put_u32(out, static_cast<std::uint32_t>(e.shape.size()));
    for (auto d : e.shape) put_u32(out, static_cast<std::uint32_t>(d));
    for (double v : e.values) put_u64(out, std::bit_cast<std::uint64_t>(v));
  }
  return out;
}

WeightFile decode_weights(std::string_view bytes) {
  Reader r(bytes);
  if (r.take(kMagic.size()) != kMagic) fail(Errc::kCorruptFile, "not a weight file (bad magic)");
  const auto version = r.u32();
  if (version != kWeightFormatVersion) {
    fail(Errc::kCorruptFile, "unsupported weight format version " + std::to_string(version));
  }
  WeightFile file;
  file.fingerprint = r.u64();
  file.spec_json = std::string(r.take(r.u32()));
  const auto count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    WeightEntry e;
    e.name = std::string(r.take(r.u32()));
    e.trainable = r.take(1)[0] != '\0';
    const auto rank = r.u32();
    if (rank > 8) fail(Errc::kCorruptFile, "implausible tensor rank in " + e.name);
    for (std::uint32_t d = 0; d < rank; ++d) e.shape.push_back(r.u32());
    const std::size_t n = nn::shape_size(e.shape);
    if (n > r.remaining() / 8) fail(Errc::kCorruptFile, "weight file truncated in " + e.name);
    e.values.resize(n);
    for (std::size_t j = 0; j < n; ++j) e.values[j] = std::bit_cast<double>(r.u64());
    file.entries.push_back(std::move(e));
  }
  if (!r.done()) fail(Errc::kCorruptFile, "trailing bytes after weight entries");
  return file;
}

}  // namespace gaitmtl
