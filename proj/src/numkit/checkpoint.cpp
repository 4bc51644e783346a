#include "drivestyle/numkit/checkpoint.hpp"

#include <json.hpp>

#include <bit>
#include <cstring>
#include <fstream>

namespace drivestyle::numkit {

static_assert(std::endian::native == std::endian::little,
              "checkpoint container assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'D', 'S', 'C', 'P'};

template <typename T>
void write_pod(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("checkpoint: truncated file");
  return v;
}

void write_string(std::ostream& os, const std::string& s) {
  write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& is) {
  const auto n = read_pod<std::uint32_t>(is);
  std::string s(n, '\0');
  is.read(s.data(), n);
  if (!is) throw std::runtime_error("checkpoint: truncated string");
  return s;
}

}  // namespace

void save_checkpoint(const std::string& path, const CheckpointHeader& header,
                     const ParamStore& store) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("checkpoint: cannot open '" + path + "' for writing");
  os.write(kMagic, 4);
  write_pod<std::uint32_t>(os, header.version);

  nlohmann::json h;
  h["fingerprint"] = header.fingerprint;
  h["seed"] = header.seed;
  h["meta"] = header.meta;
  write_string(os, h.dump());

  write_pod<std::uint64_t>(os, static_cast<std::uint64_t>(store.all().size()));
  for (const auto& p : store.all()) {
    write_string(os, p->id);
    const Shape& s = p->value.shape();
    write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(s.size()));
    for (Eigen::Index e : s) write_pod<std::uint64_t>(os, static_cast<std::uint64_t>(e));
    os.write(reinterpret_cast<const char*>(p->value.data()),
             static_cast<std::streamsize>(sizeof(double)) * p->value.size());
  }
  if (!os) throw std::runtime_error("checkpoint: write failed for '" + path + "'");
}

Checkpoint read_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open '" + path + "'");
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0) {
    throw std::runtime_error("checkpoint: '" + path + "' is not a checkpoint container");
  }
  Checkpoint ckpt;
  ckpt.header.version = read_pod<std::uint32_t>(is);
  if (ckpt.header.version != 1) {
    throw std::runtime_error("checkpoint: unsupported version " +
                             std::to_string(ckpt.header.version));
  }
  const nlohmann::json h = nlohmann::json::parse(read_string(is));
  ckpt.header.fingerprint = h.at("fingerprint").get<std::string>();
  ckpt.header.seed = h.at("seed").get<std::uint64_t>();
  ckpt.header.meta = h.at("meta").get<std::map<std::string, std::string>>();

  const auto count = read_pod<std::uint64_t>(is);
  ckpt.params.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    std::string name = read_string(is);
    const auto ndim = read_pod<std::uint32_t>(is);
    Shape shape(ndim);
    for (auto& e : shape) e = static_cast<Eigen::Index>(read_pod<std::uint64_t>(is));
    Tensor t(shape);
    is.read(reinterpret_cast<char*>(t.data()),
            static_cast<std::streamsize>(sizeof(double)) * t.size());
    if (!is) throw std::runtime_error("checkpoint: truncated param '" + name + "'");
    ckpt.params.emplace_back(std::move(name), std::move(t));
  }
  return ckpt;
}

CheckpointHeader read_checkpoint_header(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open '" + path + "'");
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0) {
    throw std::runtime_error("checkpoint: '" + path + "' is not a checkpoint container");
  }
  CheckpointHeader header;
  header.version = read_pod<std::uint32_t>(is);
  const nlohmann::json h = nlohmann::json::parse(read_string(is));
  header.fingerprint = h.at("fingerprint").get<std::string>();
  header.seed = h.at("seed").get<std::uint64_t>();
  header.meta = h.at("meta").get<std::map<std::string, std::string>>();
  return header;
}

void load_into(const Checkpoint& ckpt, ParamStore& store) {
  for (const auto& [name, tensor] : ckpt.params) {
    Param* p = store.require(name);
    if (!p->value.same_shape(tensor)) {
      throw std::runtime_error("checkpoint: shape mismatch for '" + name + "': store " +
                               shape_str(p->value.shape()) + " vs file " +
                               shape_str(tensor.shape()));
    }
    p->value = tensor;
    p->zero_grad();
  }
}

}  // namespace drivestyle::numkit
