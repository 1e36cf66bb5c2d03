#include "ppu/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "ppu/errors.hpp"

namespace ppu {

namespace {

constexpr std::array<char, 8> kMagic = {'P', 'P', 'U', 'C', 'K', 'P', 'T', '\0'};
constexpr const char* kMeanSuffix = "#running_mean";
constexpr const char* kVarSuffix = "#running_var";

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_f32(std::string& out, float f) { put_u32(out, std::bit_cast<std::uint32_t>(f)); }

struct Blob {
  std::string name;
  tensor::Shape shape;
  std::vector<float> values;
};

}  // namespace

std::string fingerprint_hex(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << v;
  return s.str();
}

std::uint64_t parse_fingerprint_hex(const std::string& s) {
  if (s.size() != 16) throw CheckpointError("malformed vocabulary fingerprint '" + s + "'");
  std::uint64_t v = 0;
  for (char c : s) {
    v <<= 4;
    if (c >= '0' && c <= '9') v |= static_cast<std::uint64_t>(c - '0');
    else if (c >= 'a' && c <= 'f') v |= static_cast<std::uint64_t>(c - 'a' + 10);
    else throw CheckpointError("malformed vocabulary fingerprint '" + s + "'");
  }
  return v;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  std::vector<Blob> blobs;
  for (const auto& name : checkpoint.params.names()) {
    const auto& t = checkpoint.params.at(name);
    blobs.push_back({name, t.shape(), std::vector<float>(t.values().begin(), t.values().end())});
  }
  for (const auto& [name, stats] : checkpoint.params.norm_stats) {
    const tensor::Shape shape{stats.mean.size()};
    blobs.push_back({name + kMeanSuffix, shape, std::vector<float>(stats.mean.begin(), stats.mean.end())});
    blobs.push_back({name + kVarSuffix, shape, std::vector<float>(stats.var.begin(), stats.var.end())});
  }

  nlohmann::json header;
  header["format_version"] = checkpoint.format_version;
  header["kind"] = checkpoint.kind;
  header["vocab_fingerprint"] = fingerprint_hex(checkpoint.vocab_fingerprint);
  header["hyperparameters"] = checkpoint.hyperparameters;
  auto directory = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& b : blobs) {
    directory.push_back({{"name", b.name}, {"shape", b.shape}, {"offset", offset}, {"count", b.values.size()}});
    offset += b.values.size() * 4;
  }
  header["tensors"] = directory;

  const std::string header_text = header.dump();
  std::string out(kMagic.begin(), kMagic.end());
  put_u32(out, static_cast<std::uint32_t>(header_text.size()));
  out += header_text;
  out.reserve(out.size() + offset);
  for (const auto& b : blobs)
    for (float f : b.values) put_f32(out, f);

  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw CheckpointError("cannot open checkpoint for writing: " + path.string());
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) throw CheckpointError("failed writing checkpoint: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw CheckpointError("cannot open checkpoint: " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || !std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
    throw CheckpointError("not a checkpoint file: " + path.string());
  }
  const auto* raw = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::uint32_t header_len = get_u32(raw + 8);
  if (12 + static_cast<std::size_t>(header_len) > bytes.size()) throw CheckpointError("truncated checkpoint header");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(12, header_len));
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("corrupt checkpoint header: ") + e.what());
  }

  Checkpoint ck;
  try {
    ck.format_version = header.at("format_version").get<int>();
    if (ck.format_version != kCheckpointFormatVersion) {
      throw CheckpointError("unsupported checkpoint format version " + std::to_string(ck.format_version));
    }
    ck.kind = header.at("kind").get<std::string>();
    ck.vocab_fingerprint = parse_fingerprint_hex(header.at("vocab_fingerprint").get<std::string>());
    ck.hyperparameters = header.at("hyperparameters");

    const std::size_t blob_start = 12 + header_len;
    const std::size_t blob_bytes = bytes.size() - blob_start;
    std::map<std::string, std::vector<double>> means, vars;
    for (const auto& entry : header.at("tensors")) {
      const auto name = entry.at("name").get<std::string>();
      const auto shape = entry.at("shape").get<tensor::Shape>();
      const auto offset = entry.at("offset").get<std::uint64_t>();
      const auto count = entry.at("count").get<std::uint64_t>();
      if (tensor::shape_size(shape) != count || offset + count * 4 > blob_bytes) {
        throw CheckpointError("tensor directory entry '" + name + "' does not fit the blob section");
      }
      std::vector<tensor::Real> values(count);
      const unsigned char* p = raw + blob_start + offset;
      for (std::size_t i = 0; i < count; ++i)
        values[i] = static_cast<tensor::Real>(std::bit_cast<float>(get_u32(p + 4 * i)));

      const auto ends_with = [&](const char* suffix) {
        const std::size_t n = std::strlen(suffix);
        return name.size() > n && name.compare(name.size() - n, n, suffix) == 0;
      };
      if (ends_with(kMeanSuffix)) {
        means[name.substr(0, name.size() - std::strlen(kMeanSuffix))].assign(values.begin(), values.end());
      } else if (ends_with(kVarSuffix)) {
        vars[name.substr(0, name.size() - std::strlen(kVarSuffix))].assign(values.begin(), values.end());
      } else {
        ck.params.add(name, tensor::Tensor::from(shape, std::move(values), true));
      }
    }
    for (auto& [name, mean] : means) {
      auto it = vars.find(name);
      if (it == vars.end()) throw CheckpointError("batch-norm statistics for '" + name + "' are incomplete");
      ck.params.norm_stats[name] = tensor::BatchNormStats{std::move(mean), it->second};
    }
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("malformed checkpoint header: ") + e.what());
  }
  return ck;
}

}  // namespace ppu
