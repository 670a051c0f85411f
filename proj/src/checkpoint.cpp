#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <json.hpp>

#include "veinseg/trainer.hpp"

namespace veinseg {

namespace {

using nlohmann::json;

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    buf_.insert(buf_.end(), b, b + n);
  }
  void u32(std::uint32_t v) {
    for (int k = 0; k < 4; ++k) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
  }
  void u64(std::uint64_t v) {
    for (int k = 0; k < 8; ++k) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
  }
  void text(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  std::vector<std::uint8_t>& buffer() { return buf_; }

 private:
  std::vector<std::uint8_t> buf_;
};

class Reader {
 public:
  Reader(const std::uint8_t* p, std::size_t n) : p_(p), n_(n) {}
  void need(std::size_t k) const {
    if (pos_ + k > n_) throw FormatError("checkpoint truncated");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) v |= std::uint32_t(p_[pos_++]) << (8 * k);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int k = 0; k < 8; ++k) v |= std::uint64_t(p_[pos_++]) << (8 * k);
    return v;
  }
  std::string text() {
    const std::uint32_t len = u32();
    need(len);
    std::string s(reinterpret_cast<const char*>(p_ + pos_), len);
    pos_ += len;
    return s;
  }
  bool done() const { return pos_ == n_; }

 private:
  const std::uint8_t* p_;
  std::size_t n_;
  std::size_t pos_ = 0;
};

std::uint32_t crc(const std::uint8_t* p, std::size_t n) {
  return static_cast<std::uint32_t>(crc32(crc32(0L, Z_NULL, 0), p, static_cast<uInt>(n)));
}

}  // namespace

const CheckpointTensor* Checkpoint::find(std::string_view name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const bool wide = ckpt.config.precision == Precision::f64;
  json header;
  header["train_config"] = json::parse(config_to_json(ckpt.config));
  header["epoch"] = ckpt.epoch;
  header["adam"] = {{"beta1", ckpt.adam.beta1},
                    {"beta2", ckpt.adam.beta2},
                    {"eps", ckpt.adam.eps},
                    {"step", ckpt.adam_step}};
  header["scalar_bytes"] = wide ? 8 : 4;

  Writer w;
  w.bytes("VSEG", 4);
  w.u32(kCheckpointVersion);
  w.text(header.dump());
  w.u32(static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const auto& t : ckpt.tensors) {
    w.text(t.name);
    w.u32(static_cast<std::uint32_t>(t.dims.size()));
    for (auto d : t.dims) w.u32(static_cast<std::uint32_t>(d));
    for (double v : t.values) {
      if (wide) {
        w.u64(std::bit_cast<std::uint64_t>(v));
      } else {
        w.u32(std::bit_cast<std::uint32_t>(static_cast<float>(v)));
      }
    }
  }
  auto& buf = w.buffer();
  const std::uint32_t sum = crc(buf.data(), buf.size());
  w.u32(sum);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("failed writing checkpoint '" + path.string() + "'");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path.string() + "'");
  const std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(in)),
                                      std::istreambuf_iterator<char>());
  if (buf.size() < 4 || std::memcmp(buf.data(), "VSEG", 4) != 0) {
    throw FormatError("'" + path.string() + "' is not a checkpoint (bad magic)");
  }
  if (buf.size() < 12) throw FormatError("checkpoint truncated");
  Reader head(buf.data() + 4, 4);
  const std::uint32_t version = head.u32();
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  Reader footer(buf.data() + buf.size() - 4, 4);
  if (footer.u32() != crc(buf.data(), buf.size() - 4)) {
    throw FormatError("checkpoint checksum mismatch in '" + path.string() + "'");
  }

  Reader r(buf.data() + 8, buf.size() - 12);
  Checkpoint ckpt;
  int scalar_bytes = 4;
  try {
    const json header = json::parse(r.text());
    ckpt.config = config_from_json(header.at("train_config").dump());
    ckpt.epoch = header.at("epoch").get<int>();
    const auto& adam = header.at("adam");
    ckpt.adam.beta1 = adam.at("beta1").get<double>();
    ckpt.adam.beta2 = adam.at("beta2").get<double>();
    ckpt.adam.eps = adam.at("eps").get<double>();
    ckpt.adam_step = adam.at("step").get<std::uint64_t>();
    scalar_bytes = header.at("scalar_bytes").get<int>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed checkpoint header: ") + e.what());
  }
  if (scalar_bytes != 4 && scalar_bytes != 8) throw FormatError("unsupported scalar width");

  const std::uint32_t count = r.u32();
  for (std::uint32_t k = 0; k < count; ++k) {
    CheckpointTensor t;
    t.name = r.text();
    const std::uint32_t rank = r.u32();
    std::size_t size = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      t.dims.push_back(r.u32());
      size *= static_cast<std::size_t>(t.dims.back());
    }
    r.need(size * static_cast<std::size_t>(scalar_bytes));
    t.values.resize(size);
    for (auto& v : t.values) {
      v = scalar_bytes == 8 ? std::bit_cast<double>(r.u64())
                            : static_cast<double>(std::bit_cast<float>(r.u32()));
    }
    ckpt.tensors.push_back(std::move(t));
  }
  if (!r.done()) throw FormatError("trailing bytes after checkpoint tensors");
  return ckpt;
}

}  // namespace veinseg
