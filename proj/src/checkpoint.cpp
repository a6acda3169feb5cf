#include "stfm/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "stfm/errors.hpp"

namespace stfm {

namespace {

constexpr char kMagic[4] = {'S', 'T', 'F', 'M'};
constexpr std::size_t kMaxNameLen = 4096;
constexpr std::size_t kMaxRank = 3;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof(bits));
  put_u64(out, bits);
}

class Reader {
 public:
  explicit Reader(std::ifstream& in) : in_(in) {}

  bool at_eof() {
    return in_.peek() == std::ifstream::traits_type::eof();
  }

  std::uint32_t get_u32() { return static_cast<std::uint32_t>(get_raw(4)); }
  std::uint64_t get_u64() { return get_raw(8); }

  double get_f64() {
    const std::uint64_t bits = get_raw(8);
    double v;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
  }

  std::string get_bytes(std::size_t n) {
    std::string s(n, '\0');
    in_.read(s.data(), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n)
      throw Error(ErrorKind::checkpoint_truncated, "checkpoint: unexpected end of file");
    return s;
  }

 private:
  std::uint64_t get_raw(int bytes) {
    unsigned char buf[8];
    in_.read(reinterpret_cast<char*>(buf), bytes);
    if (in_.gcount() != bytes)
      throw Error(ErrorKind::checkpoint_truncated, "checkpoint: unexpected end of file");
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
  }

  std::ifstream& in_;
};

}  // namespace

void checkpoint_save(const std::vector<NamedTensorRef>& tensors, const std::string& path) {
  std::string out;
  out.append(kMagic, sizeof(kMagic));
  put_u32(out, kCheckpointVersion);
  for (const auto& ref : tensors) {
    put_u64(out, ref.name.size());
    out.append(ref.name);
    const Tensor& t = *ref.tensor;
    put_u64(out, t.rank());
    for (std::size_t i = 0; i < t.rank(); ++i) put_u64(out, t.dim(i));
    for (double v : t.flat()) put_f64(out, v);
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw Error::io("checkpoint: cannot open '" + path + "' for writing");
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) throw Error::io("checkpoint: write failed for '" + path + "'");
}

void checkpoint_save(ModelParams& params, const std::string& path) {
  checkpoint_save(named_tensors(params), path);
}

LoadedCheckpoint checkpoint_load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error::io("checkpoint: cannot open '" + path + "'");
  Reader r(in);

  const std::string magic = r.get_bytes(sizeof(kMagic));
  if (std::memcmp(magic.data(), kMagic, sizeof(kMagic)) != 0)
    throw Error(ErrorKind::checkpoint_format, "checkpoint: bad magic bytes in '" + path + "'");
  const std::uint32_t version = r.get_u32();
  if (version != kCheckpointVersion)
    throw Error(ErrorKind::checkpoint_version,
                "checkpoint: unsupported format version " + std::to_string(version));

  LoadedCheckpoint loaded;
  while (!r.at_eof()) {
    const std::uint64_t name_len = r.get_u64();
    if (name_len == 0 || name_len > kMaxNameLen)
      throw Error(ErrorKind::checkpoint_format,
                  "checkpoint: implausible name length " + std::to_string(name_len));
    std::string name = r.get_bytes(name_len);
    const std::uint64_t rank = r.get_u64();
    if (rank == 0 || rank > kMaxRank)
      throw Error(ErrorKind::checkpoint_format,
                  "checkpoint: tensor '" + name + "' has rank " + std::to_string(rank));
    std::vector<std::size_t> shape(rank);
    std::size_t count = 1;
    for (std::uint64_t i = 0; i < rank; ++i) {
      const std::uint64_t e = r.get_u64();
      if (e == 0)
        throw Error(ErrorKind::checkpoint_format,
                    "checkpoint: tensor '" + name + "' has a zero extent");
      shape[i] = static_cast<std::size_t>(e);
      count *= shape[i];
    }
    Tensor t(shape);
    for (std::size_t i = 0; i < count; ++i) t.flat()[i] = r.get_f64();
    loaded.tensors.emplace_back(std::move(name), std::move(t));
  }
  return loaded;
}

void checkpoint_assign(ModelParams& params, const LoadedCheckpoint& loaded) {
  auto view = named_tensors(params);
  if (view.size() != loaded.tensors.size())
    throw Error(ErrorKind::checkpoint_shape,
                "checkpoint: holds " + std::to_string(loaded.tensors.size()) +
                    " tensors, model expects " + std::to_string(view.size()));
  for (std::size_t i = 0; i < view.size(); ++i) {
    const auto& [name, tensor] = loaded.tensors[i];
    if (name != view[i].name)
      throw Error(ErrorKind::checkpoint_shape,
                  "checkpoint: tensor '" + name + "' where '" + view[i].name +
                      "' was expected");
    if (!tensor.same_shape(*view[i].tensor))
      throw Error(ErrorKind::checkpoint_shape,
                  "checkpoint: tensor '" + name + "' has shape " + tensor.shape_str() +
                      ", model expects " + view[i].tensor->shape_str());
    *view[i].tensor = tensor;
  }
}

}  // namespace stfm
