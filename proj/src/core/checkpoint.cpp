#include "uwir/core/checkpoint.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <vector>

#include <json.hpp>

#include "uwir/core/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint layout assumes a little-endian host");

namespace uwir {
namespace {

constexpr char kMagic[8] = {'U', 'W', 'C', 'K', 'P', 'T', '0', '1'};

void append_u64(std::vector<unsigned char>& buf, std::uint64_t v) {
  unsigned char b[8];
  std::memcpy(b, &v, 8);
  buf.insert(buf.end(), b, b + 8);
}

std::uint32_t crc_of(const unsigned char* p, std::size_t n) {
  return static_cast<std::uint32_t>(::crc32(0L, p, static_cast<uInt>(n)));
}

}  // namespace

void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  nlohmann::json dir = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& [name, t] : ck.params) {
    dir.push_back({{"name", name},
                   {"shape", t.shape},
                   {"offset", offset},
                   {"count", t.numel()}});
    offset += t.numel() * sizeof(double);
  }
  nlohmann::json header = {
      {"meta",
       {{"config_kv", ck.meta.config_kv},
        {"stage", ck.meta.stage},
        {"iteration", ck.meta.iteration},
        {"rng_state", ck.meta.rng_state}}},
      {"arrays", dir}};
  std::string json_text = header.dump();

  std::vector<unsigned char> buf;
  buf.reserve(16 + json_text.size() + offset + 4);
  buf.insert(buf.end(), kMagic, kMagic + 8);
  append_u64(buf, json_text.size());
  buf.insert(buf.end(), json_text.begin(), json_text.end());
  for (const auto& [name, t] : ck.params) {
    (void)name;
    const unsigned char* p = reinterpret_cast<const unsigned char*>(t.data.data());
    buf.insert(buf.end(), p, p + t.numel() * sizeof(double));
  }
  std::uint32_t crc = crc_of(buf.data(), buf.size());
  unsigned char cb[4];
  std::memcpy(cb, &crc, 4);
  buf.insert(buf.end(), cb, cb + 4);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("checkpoint: cannot write " + path);
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("checkpoint: cannot open " + path);
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
  if (buf.size() < 8 + 8 + 4) throw ChecksumError("checkpoint: file too short: " + path);

  // Verify the trailing CRC before trusting any field.
  std::uint32_t stored = 0;
  std::memcpy(&stored, buf.data() + buf.size() - 4, 4);
  std::uint32_t actual = crc_of(buf.data(), buf.size() - 4);
  if (stored != actual) throw ChecksumError("checkpoint: CRC mismatch in " + path);

  if (std::memcmp(buf.data(), kMagic, 8) != 0)
    throw VersionError("checkpoint: unknown format magic in " + path);

  std::uint64_t json_len = 0;
  std::memcpy(&json_len, buf.data() + 8, 8);
  std::size_t payload_start = 16 + json_len;
  if (payload_start + 4 > buf.size())
    throw ChecksumError("checkpoint: header overruns file in " + path);

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(buf.begin() + 16, buf.begin() + 16 + json_len);
  } catch (const nlohmann::json::exception& e) {
    throw ChecksumError(std::string("checkpoint: bad JSON header: ") + e.what());
  }

  Checkpoint ck;
  const auto& meta = header.at("meta");
  ck.meta.config_kv = meta.at("config_kv").get<std::string>();
  ck.meta.stage = meta.at("stage").get<std::string>();
  ck.meta.iteration = meta.at("iteration").get<std::int64_t>();
  ck.meta.rng_state = meta.at("rng_state").get<std::string>();

  std::size_t payload_end = buf.size() - 4;
  for (const auto& entry : header.at("arrays")) {
    std::string name = entry.at("name").get<std::string>();
    std::vector<int> shape = entry.at("shape").get<std::vector<int>>();
    std::uint64_t off = entry.at("offset").get<std::uint64_t>();
    std::uint64_t count = entry.at("count").get<std::uint64_t>();
    if (count != Tensor::numel_of(shape))
      throw ChecksumError("checkpoint: shape/count mismatch for " + name);
    std::size_t begin = payload_start + off;
    std::size_t bytes = count * sizeof(double);
    if (begin + bytes > payload_end)
      throw ChecksumError("checkpoint: array " + name + " overruns file");
    Tensor t(shape);
    std::memcpy(t.data.data(), buf.data() + begin, bytes);
    ck.params.emplace(std::move(name), std::move(t));
  }
  return ck;
}

}  // namespace uwir
