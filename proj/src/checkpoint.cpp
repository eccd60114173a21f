#include "mcnet/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <functional>
#include <map>

#include "mcnet/error.hpp"

namespace mcnet {

namespace {

constexpr char kMagic[4] = {'M', 'C', 'N', 'T'};
constexpr uint32_t kVersion = 1;

void write_u32(std::ostream& out, uint32_t v) {
  unsigned char b[4] = {(unsigned char)(v), (unsigned char)(v >> 8),
                        (unsigned char)(v >> 16), (unsigned char)(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

void write_u64(std::ostream& out, uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = (unsigned char)(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

uint32_t read_u32(std::istream& in, const std::string& path) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) {
    fail(ErrorClass::io, "truncated checkpoint '" + path + "'");
  }
  return uint32_t(b[0]) | uint32_t(b[1]) << 8 | uint32_t(b[2]) << 16 |
         uint32_t(b[3]) << 24;
}

uint64_t read_u64(std::istream& in, const std::string& path) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) {
    fail(ErrorClass::io, "truncated checkpoint '" + path + "'");
  }
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= uint64_t(b[i]) << (8 * i);
  return v;
}

template <typename T>
void write_entry(std::ostream& out, const std::string& name, Shape shape,
                 const std::vector<T>& values) {
  write_u32(out, uint32_t(name.size()));
  out.write(name.data(), std::streamsize(name.size()));
  write_u32(out, uint32_t(shape.n));
  write_u32(out, uint32_t(shape.c));
  write_u32(out, uint32_t(shape.h));
  write_u32(out, uint32_t(shape.w));
  for (T v : values) {
    const float f = float(v);
    static_assert(sizeof(float) == 4);
    char buf[4];
    std::memcpy(buf, &f, 4);
    out.write(buf, 4);
  }
}

struct EntryTarget {
  Shape shape;
  std::function<void(const std::vector<float>&)> store;
  bool filled = false;
};

}  // namespace

template <typename T>
void save_model(const Model<T>& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    fail(ErrorClass::io, "cannot open '" + path + "' for writing");
  }
  out.write(kMagic, 4);
  write_u32(out, kVersion);
  const std::string cfg = config_to_json(model.config());
  write_u64(out, cfg.size());
  out.write(cfg.data(), std::streamsize(cfg.size()));

  const auto& params = model.params_store();
  const auto& bn_states = model.bn_states();
  const auto& bn_names = model.bn_names();
  write_u32(out, uint32_t(params.size() * 2 + bn_states.size() * 2));
  for (const auto& p : params) {
    write_entry(out, p.name + "/weights", p.weights->shape, p.weights->v);
    write_entry(out, p.name + "/bias", p.bias->shape, p.bias->v);
  }
  for (size_t i = 0; i < bn_states.size(); ++i) {
    const Shape s{1, int(bn_states[i].running_mean.size()), 1, 1};
    write_entry(out, bn_names[i] + "/running_mean", s,
                bn_states[i].running_mean);
    write_entry(out, bn_names[i] + "/running_var", s,
                bn_states[i].running_var);
  }
  if (!out) {
    fail(ErrorClass::io, "write failed for '" + path + "'");
  }
}

template <typename T>
Model<T> load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    fail(ErrorClass::io, "cannot open checkpoint '" + path + "'");
  }
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    fail(ErrorClass::io, "'" + path + "' is not an MCNT checkpoint");
  }
  const uint32_t version = read_u32(in, path);
  if (version != kVersion) {
    fail(ErrorClass::io, "unsupported checkpoint version " +
                             std::to_string(version) + " in '" + path + "'");
  }
  const uint64_t cfg_len = read_u64(in, path);
  std::string cfg_text(cfg_len, '\0');
  if (!in.read(cfg_text.data(), std::streamsize(cfg_len))) {
    fail(ErrorClass::io, "truncated checkpoint '" + path + "'");
  }
  Model<T> model = Model<T>::assemble(config_from_json(cfg_text));

  std::map<std::string, EntryTarget> targets;
  for (auto& p : model.params_store()) {
    targets[p.name + "/weights"] = {
        p.weights->shape, [&p](const std::vector<float>& v) {
          for (size_t i = 0; i < v.size(); ++i) p.weights->v[i] = T(v[i]);
        }};
    targets[p.name + "/bias"] = {
        p.bias->shape, [&p](const std::vector<float>& v) {
          for (size_t i = 0; i < v.size(); ++i) p.bias->v[i] = T(v[i]);
        }};
  }
  const auto& bn_names = model.bn_names();
  for (size_t i = 0; i < model.bn_states().size(); ++i) {
    BnState<T>& st = model.bn_states()[i];
    const Shape s{1, int(st.running_mean.size()), 1, 1};
    targets[bn_names[i] + "/running_mean"] = {
        s, [&st](const std::vector<float>& v) {
          for (size_t k = 0; k < v.size(); ++k) st.running_mean[k] = T(v[k]);
        }};
    targets[bn_names[i] + "/running_var"] = {
        s, [&st](const std::vector<float>& v) {
          for (size_t k = 0; k < v.size(); ++k) st.running_var[k] = T(v[k]);
        }};
  }

  const uint32_t n_entries = read_u32(in, path);
  for (uint32_t e = 0; e < n_entries; ++e) {
    const uint32_t name_len = read_u32(in, path);
    std::string name(name_len, '\0');
    if (!in.read(name.data(), name_len)) {
      fail(ErrorClass::io, "truncated checkpoint '" + path + "'");
    }
    Shape shape;
    shape.n = int(read_u32(in, path));
    shape.c = int(read_u32(in, path));
    shape.h = int(read_u32(in, path));
    shape.w = int(read_u32(in, path));
    auto it = targets.find(name);
    if (it == targets.end()) {
      fail(ErrorClass::io,
           "checkpoint entry '" + name + "' has no matching layer");
    }
    if (!(it->second.shape == shape)) {
      fail(ErrorClass::io, "checkpoint entry '" + name + "' shape " +
                               shape.str() + " does not match model " +
                               it->second.shape.str());
    }
    std::vector<float> values(size_t(shape.numel()));
    if (!in.read(reinterpret_cast<char*>(values.data()),
                 std::streamsize(values.size() * 4))) {
      fail(ErrorClass::io, "truncated checkpoint '" + path + "'");
    }
    it->second.store(values);
    it->second.filled = true;
  }
  for (const auto& [name, target] : targets) {
    if (!target.filled) {
      fail(ErrorClass::io, "checkpoint is missing entry '" + name + "'");
    }
  }
  return model;
}

template void save_model<float>(const Model<float>&, const std::string&);
template void save_model<double>(const Model<double>&, const std::string&);
template Model<float> load_model<float>(const std::string&);
template Model<double> load_model<double>(const std::string&);

}  // namespace mcnet
