#include "tango/io.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>

#include "tango/config.hpp"
#include "tango/errors.hpp"

namespace tango {

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

namespace {

constexpr char kCheckpointMagic[8] = {'T', 'A', 'N', 'G', 'O', 'C', 'K', 'P'};
constexpr char kLatentMagic[8] = {'T', 'A', 'N', 'G', 'O', 'L', 'A', 'T'};

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path) : out_(path, std::ios::binary) {
    if (!out_) throw FormatError("cannot write " + path.string());
  }
  template <typename T>
  void put(T v) {
    out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  void bytes(const char* p, std::size_t n) { out_.write(p, static_cast<long>(n)); }
  void str(const std::string& s) {
    put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  void doubles(std::span<const double> v) {
    bytes(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(double));
  }

 private:
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path)
      : in_(path, std::ios::binary), path_(path.string()) {
    if (!in_) throw FormatError("cannot open " + path_);
  }
  template <typename T>
  T get() {
    T v{};
    read(reinterpret_cast<char*>(&v), sizeof(T));
    return v;
  }
  void read(char* p, std::size_t n) {
    in_.read(p, static_cast<long>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      throw FormatError("truncated file " + path_);
    }
  }
  std::string str() {
    const auto n = get<std::uint32_t>();
    if (n > (1u << 20)) throw FormatError("implausible string length in " + path_);
    std::string s(n, '\0');
    read(s.data(), n);
    return s;
  }
  std::vector<double> doubles(std::size_t n) {
    std::vector<double> v(n);
    read(reinterpret_cast<char*>(v.data()), n * sizeof(double));
    return v;
  }
  void magic(const char (&expected)[8]) {
    char m[8];
    read(m, 8);
    if (std::memcmp(m, expected, 8) != 0) throw FormatError("bad magic in " + path_);
  }

 private:
  std::ifstream in_;
  std::string path_;
};

}  // namespace

const Tensor& Checkpoint::get(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return tensors[i];
  throw FormatError("checkpoint has no tensor '" + name + "'");
}

bool Checkpoint::has(const std::string& name) const {
  return std::find(names.begin(), names.end(), name) != names.end();
}

void Checkpoint::add(std::string name, Tensor tensor) {
  names.push_back(std::move(name));
  tensors.push_back(std::move(tensor));
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  if (ckpt.names.size() != ckpt.tensors.size()) {
    throw ContractError("checkpoint names and tensors differ in count");
  }
  Writer w(path);
  w.bytes(kCheckpointMagic, 8);
  w.put<std::uint32_t>(Checkpoint::kVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(ckpt.metadata.size()));
  for (const auto& [k, v] : ckpt.metadata) {
    w.str(k);
    w.str(v);
  }
  w.put<std::uint32_t>(static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (std::size_t i = 0; i < ckpt.tensors.size(); ++i) {
    const auto& t = ckpt.tensors[i];
    w.str(ckpt.names[i]);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape()) w.put<std::uint64_t>(d);
    w.doubles(t.data());
  }
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  Reader r(path);
  r.magic(kCheckpointMagic);
  const auto version = r.get<std::uint32_t>();
  if (version != Checkpoint::kVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ckpt;
  const auto nmeta = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < nmeta; ++i) {
    auto k = r.str();
    ckpt.metadata[k] = r.str();
  }
  const auto count = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    auto name = r.str();
    const auto rank = r.get<std::uint32_t>();
    if (rank > 8) throw FormatError("implausible tensor rank");
    Shape shape(rank);
    for (auto& d : shape) d = r.get<std::uint64_t>();
    const auto n = shape_numel(shape);
    if (n > (std::size_t{1} << 28)) throw FormatError("implausible tensor size");
    ckpt.add(std::move(name), Tensor(shape, r.doubles(n)));
  }
  return ckpt;
}

void save_latents(const std::filesystem::path& path, const LatentDump& dump) {
  Writer w(path);
  w.bytes(kLatentMagic, 8);
  w.put<std::uint32_t>(LatentDump::kVersion);
  w.put<std::uint64_t>(dump.shape.channels);
  w.put<std::uint64_t>(dump.shape.height);
  w.put<std::uint64_t>(dump.shape.width);
  w.put<std::uint64_t>(dump.latents.size());
  w.put<std::uint64_t>(dump.seed);
  w.put<std::uint64_t>(dump.schedule_hash);
  w.put<std::uint64_t>(dump.config_hash);
  for (const auto& z : dump.latents) {
    require_same_shape(z, LatentTensor::zeros(dump.shape), "latent dump");
    w.doubles(z.values());
  }
}

LatentDump load_latents(const std::filesystem::path& path) {
  Reader r(path);
  r.magic(kLatentMagic);
  const auto version = r.get<std::uint32_t>();
  if (version != LatentDump::kVersion) {
    throw FormatError("unsupported latent dump version " + std::to_string(version));
  }
  LatentDump dump;
  dump.shape.channels = r.get<std::uint64_t>();
  dump.shape.height = r.get<std::uint64_t>();
  dump.shape.width = r.get<std::uint64_t>();
  const auto count = r.get<std::uint64_t>();
  dump.seed = r.get<std::uint64_t>();
  dump.schedule_hash = r.get<std::uint64_t>();
  dump.config_hash = r.get<std::uint64_t>();
  if (dump.shape.numel() * count > (std::size_t{1} << 28)) {
    throw FormatError("implausible latent dump size");
  }
  for (std::uint64_t i = 0; i < count; ++i) {
    dump.latents.emplace_back(dump.shape, r.doubles(dump.shape.numel()));
  }
  return dump;
}

void save_latents_csv(const std::filesystem::path& path, const LatentDump& dump) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  out << "# shape=" << dump.shape.to_string() << " seed=" << dump.seed
      << " schedule=" << hex64(dump.schedule_hash)
      << " config=" << hex64(dump.config_hash) << "\n";
  for (std::size_t i = 0; i < dump.latents.size(); ++i) {
    out << i;
    for (double v : dump.latents[i].values()) out << ',' << format_double(v);
    out << '\n';
  }
}

}  // namespace tango
