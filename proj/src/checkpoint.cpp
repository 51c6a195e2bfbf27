#include "ecg/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>

#include "ecg/errors.hpp"

namespace ecg {

namespace {

void put_u32(std::string& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>(v >> (8 * i)));
}

void put_u64(std::string& buf, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>(v >> (8 * i)));
}

void put_f64(std::string& buf, double v) {
  put_u64(buf, std::bit_cast<std::uint64_t>(v));
}

void put_str(std::string& buf, const std::string& s) {
  put_u32(buf, static_cast<std::uint32_t>(s.size()));
  buf.append(s);
}

class Reader {
 public:
  Reader(std::string data, std::string path)
      : data_(std::move(data)), path_(std::move(path)) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(
               static_cast<unsigned char>(data_[pos_ + i]))
           << (8 * i);
    }
    pos_ += 4;
    return v;
  }

  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<std::uint64_t>(
               static_cast<unsigned char>(data_[pos_ + i]))
           << (8 * i);
    }
    pos_ += 8;
    return v;
  }

  double f64() { return std::bit_cast<double>(u64()); }

  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  void raw(char* dst, std::size_t n) {
    need(n);
    std::memcpy(dst, data_.data() + pos_, n);
    pos_ += n;
  }

  void need(std::size_t n) const {
    if (pos_ + n > data_.size()) {
      throw DataError("checkpoint " + path_ + ": truncated file");
    }
  }

 private:
  std::string data_;
  std::string path_;
  std::size_t pos_ = 0;
};

std::string serialize(const std::vector<const nn::ParamTensor*>& params,
                      const CheckpointMeta& metadata) {
  std::string buf;
  buf.append(kCheckpointMagic, sizeof(kCheckpointMagic));
  put_u32(buf, kCheckpointVersion);
  put_u32(buf, static_cast<std::uint32_t>(metadata.size()));
  for (const auto& [key, value] : metadata) {
    put_str(buf, key);
    put_str(buf, value);
  }
  put_u32(buf, static_cast<std::uint32_t>(params.size()));
  for (const nn::ParamTensor* p : params) {
    put_str(buf, p->name);
    put_u32(buf, static_cast<std::uint32_t>(p->value.rank()));
    for (std::size_t d : p->value.shape()) {
      put_u64(buf, static_cast<std::uint64_t>(d));
    }
    for (double v : p->value.values()) put_f64(buf, v);
  }
  return buf;
}

Reader open_reader(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError("checkpoint " + path + ": cannot open");
  }
  std::string data((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  Reader r(std::move(data), path);
  char magic[sizeof(kCheckpointMagic)];
  r.raw(magic, sizeof(magic));
  if (std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    throw DataError("checkpoint " + path + ": bad magic");
  }
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw DataError("checkpoint " + path + ": unsupported version " +
                    std::to_string(version));
  }
  return r;
}

CheckpointMeta read_meta(Reader& r) {
  CheckpointMeta meta;
  const std::uint32_t n = r.u32();
  meta.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    std::string key = r.str();
    std::string value = r.str();
    meta.emplace_back(std::move(key), std::move(value));
  }
  return meta;
}

}  // namespace

void save_checkpoint(const std::string& path,
                     const std::vector<const nn::ParamTensor*>& params,
                     const CheckpointMeta& metadata) {
  const std::string buf = serialize(params, metadata);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw DataError("checkpoint " + path + ": cannot open for writing");
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) {
    throw DataError("checkpoint " + path + ": write failed");
  }
}

CheckpointMeta load_checkpoint(const std::string& path,
                               const std::vector<nn::ParamTensor*>& params) {
  Reader r = open_reader(path);
  CheckpointMeta meta = read_meta(r);

  std::map<std::string, nn::ParamTensor*> by_name;
  for (nn::ParamTensor* p : params) by_name[p->name] = p;

  const std::uint32_t count = r.u32();
  if (count != params.size()) {
    throw DataError("checkpoint " + path + ": holds " + std::to_string(count) +
                    " tensors, model expects " +
                    std::to_string(params.size()));
  }
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = r.str();
    const std::uint32_t rank = r.u32();
    std::vector<std::size_t> shape(rank);
    std::size_t total = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      shape[d] = static_cast<std::size_t>(r.u64());
      total *= shape[d];
    }
    auto it = by_name.find(name);
    if (it == by_name.end()) {
      throw DataError("checkpoint " + path + ": unexpected tensor '" + name +
                      "'");
    }
    nn::ParamTensor* p = it->second;
    if (p->value.shape() != shape) {
      throw DataError("checkpoint " + path + ": tensor '" + name +
                      "' has shape " + shape_to_string(shape) +
                      ", model expects " + p->value.shape_str());
    }
    for (std::size_t j = 0; j < total; ++j) p->value[j] = r.f64();
    by_name.erase(it);
  }
  if (!by_name.empty()) {
    throw DataError("checkpoint " + path + ": missing tensor '" +
                    by_name.begin()->first + "'");
  }
  return meta;
}

CheckpointMeta read_checkpoint_meta(const std::string& path) {
  Reader r = open_reader(path);
  return read_meta(r);
}

}  // namespace ecg
