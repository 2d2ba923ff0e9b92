#include "propspan/autograd/checkpoint.hpp"

#include <bit>
#include <unordered_map>

#include "propspan/corpus/io.hpp"

namespace propspan::ag {

namespace {

constexpr std::string_view kMagic = "PROPSPAN";

template <typename U>
void put(std::string& out, U value) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
}

class Reader {
 public:
  Reader(const std::string& bytes, const std::string& source) : bytes_(bytes), source_(source) {}

  template <typename U>
  U get() {
    need(sizeof(U));
    U value = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      value |= static_cast<U>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(U);
    return value;
  }
  std::string take(std::size_t n) {
    need(n);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw FormatError(source_ + ": truncated checkpoint");
  }
  const std::string& bytes_;
  const std::string& source_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_checkpoint(const std::string& config, const ParameterList<float>& params) {
  std::string out(kMagic);
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, config.size());
  out += config;
  put<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p.name.size()));
    out += p.name;
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p.tensor.rank()));
    for (auto d : p.tensor.shape()) put<std::uint64_t>(out, d);
    for (float v : p.tensor.values()) put<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
  }
  return out;
}

Checkpoint deserialize_checkpoint(const std::string& bytes, const std::string& source) {
  Reader in(bytes, source);
  if (in.take(kMagic.size()) != kMagic) throw FormatError(source + ": not a checkpoint file");
  const auto version = in.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw FormatError(source + ": unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ckpt;
  ckpt.config = in.take(in.get<std::uint64_t>());
  const auto count = in.get<std::uint32_t>();
  for (std::uint32_t t = 0; t < count; ++t) {
    StoredTensor tensor;
    tensor.name = in.take(in.get<std::uint32_t>());
    const auto rank = in.get<std::uint32_t>();
    for (std::uint32_t r = 0; r < rank; ++r) tensor.shape.push_back(in.get<std::uint64_t>());
    tensor.values.resize(shape_size(tensor.shape));
    for (auto& v : tensor.values) v = std::bit_cast<float>(in.get<std::uint32_t>());
    ckpt.tensors.push_back(std::move(tensor));
  }
  if (!in.done()) throw FormatError(source + ": trailing bytes after checkpoint");
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const std::string& config,
                     const ParameterList<float>& params) {
  corpus::write_file(path, serialize_checkpoint(config, params));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return deserialize_checkpoint(corpus::read_file(path), path.string());
}

void restore_parameters(const Checkpoint& checkpoint, const ParameterList<float>& params) {
  std::unordered_map<std::string, const StoredTensor*> stored;
  for (const auto& t : checkpoint.tensors) stored[t.name] = &t;
  if (stored.size() != params.size()) {
    throw FormatError("checkpoint holds " + std::to_string(stored.size()) + " tensors, model expects " +
                      std::to_string(params.size()));
  }
  for (const auto& p : params) {
    const auto it = stored.find(p.name);
    if (it == stored.end()) throw FormatError("checkpoint lacks tensor " + p.name);
    if (it->second->shape != p.tensor.shape()) {
      throw FormatError("checkpoint tensor " + p.name + " has shape " + shape_string(it->second->shape) +
                        ", model expects " + shape_string(p.tensor.shape()));
    }
    auto tensor = p.tensor;
    std::copy(it->second->values.begin(), it->second->values.end(), tensor.mutable_values().begin());
  }
}

}  // namespace propspan::ag
