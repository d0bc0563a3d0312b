#include "sim2real/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fmt/format.h>
#include <fmt/ranges.h>

#include "sim2real/error.hpp"
#include "sim2real/fs_util.hpp"

#ifndef SIM2REAL_VERSION
#define SIM2REAL_VERSION "0.0.0"
#endif

namespace sim2real {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes little endian");

namespace {

constexpr char kMagic[8] = {'S', '2', 'R', 'C', 'K', 'P', 'T', '1'};
constexpr int kFormatVersion = 1;

std::string dtype_name(torch::ScalarType t) {
  switch (t) {
    case torch::kFloat32: return "float32";
    case torch::kFloat64: return "float64";
    case torch::kInt64: return "int64";
    default: throw InputError(fmt::format("unsupported tensor dtype {}", c10::toString(t)));
  }
}

torch::ScalarType dtype_from_name(const std::string& s) {
  if (s == "float32") return torch::kFloat32;
  if (s == "float64") return torch::kFloat64;
  if (s == "int64") return torch::kInt64;
  throw InputError(fmt::format("unsupported tensor dtype '{}' in checkpoint", s));
}

void parse_header(const std::string& bytes, const std::filesystem::path& path, json& header,
                  std::size_t& payload_start) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, 8) != 0) {
    throw IoError(fmt::format("'{}' is not a sim2real checkpoint", path.string()));
  }
  std::uint64_t header_len = 0;
  std::memcpy(&header_len, bytes.data() + 8, 8);
  if (16 + header_len > bytes.size()) {
    throw IoError(fmt::format("checkpoint '{}' is truncated", path.string()));
  }
  try {
    header = json::parse(bytes.substr(16, header_len));
  } catch (const json::exception& e) {
    throw IoError(fmt::format("checkpoint '{}' has a corrupt header: {}", path.string(), e.what()));
  }
  payload_start = 16 + header_len;
}

}  // namespace

std::string library_version() { return SIM2REAL_VERSION; }

const torch::Tensor& Checkpoint::tensor(const std::string& name) const {
  for (const auto& [n, t] : tensors) {
    if (n == name) return t;
  }
  throw InputError(fmt::format("checkpoint '{}' has no tensor '{}'", kind, name));
}

bool Checkpoint::has_tensor(const std::string& name) const {
  for (const auto& [n, t] : tensors) {
    if (n == name) return true;
  }
  return false;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  json header;
  header["format"] = kFormatVersion;
  header["library_version"] = library_version();
  header["kind"] = ckpt.kind;
  header["meta"] = ckpt.meta;
  header["tensors"] = json::array();
  std::string payload;
  std::vector<torch::Tensor> contiguous;
  for (const auto& [name, t] : ckpt.tensors) {
    auto c = t.detach().cpu().contiguous();
    const std::size_t nbytes = static_cast<std::size_t>(c.numel()) * c.element_size();
    header["tensors"].push_back({{"name", name},
                                 {"dtype", dtype_name(c.scalar_type())},
                                 {"shape", c.sizes().vec()},
                                 {"offset", payload.size()},
                                 {"nbytes", nbytes}});
    payload.append(static_cast<const char*>(c.data_ptr()), nbytes);
  }
  const std::string header_text = header.dump();
  std::string bytes(kMagic, 8);
  const std::uint64_t len = header_text.size();
  bytes.append(reinterpret_cast<const char*>(&len), 8);
  bytes += header_text;
  bytes += payload;
  write_bytes_atomic(path, bytes);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const std::string bytes = read_text(path);
  json header;
  std::size_t start = 0;
  parse_header(bytes, path, header, start);
  Checkpoint ckpt;
  try {
    ckpt.kind = header.at("kind").get<std::string>();
    ckpt.meta = header.value("meta", json::object());
    for (const auto& jt : header.at("tensors")) {
      const auto shape = jt.at("shape").get<std::vector<int64_t>>();
      const auto offset = jt.at("offset").get<std::size_t>();
      const auto nbytes = jt.at("nbytes").get<std::size_t>();
      if (start + offset + nbytes > bytes.size()) {
        throw IoError(fmt::format("checkpoint '{}' is truncated", path.string()));
      }
      auto t = torch::empty(shape, torch::TensorOptions().dtype(dtype_from_name(jt.at("dtype"))));
      if (static_cast<std::size_t>(t.numel()) * t.element_size() != nbytes) {
        throw IoError(fmt::format("tensor '{}' size disagrees with its shape", jt.at("name").get<std::string>()));
      }
      std::memcpy(t.data_ptr(), bytes.data() + start + offset, nbytes);
      ckpt.tensors.emplace_back(jt.at("name").get<std::string>(), std::move(t));
    }
  } catch (const json::exception& e) {
    throw IoError(fmt::format("checkpoint '{}' header is malformed: {}", path.string(), e.what()));
  }
  return ckpt;
}

json read_checkpoint_header(const std::filesystem::path& path) {
  const std::string bytes = read_text(path);
  json header;
  std::size_t start = 0;
  parse_header(bytes, path, header, start);
  header.erase("tensors");
  return header;
}

void add_module_state(Checkpoint& ckpt, const torch::nn::Module& module, const std::string& prefix) {
  for (const auto& p : module.named_parameters(true)) ckpt.tensors.emplace_back(prefix + p.key(), p.value());
  for (const auto& b : module.named_buffers(true)) ckpt.tensors.emplace_back(prefix + b.key(), b.value());
}

void load_module_state(torch::nn::Module& module, const Checkpoint& ckpt, const std::string& prefix) {
  torch::NoGradGuard no_grad;
  auto copy_into = [&](const std::string& name, torch::Tensor& dst) {
    const torch::Tensor& src = ckpt.tensor(prefix + name);
    if (src.sizes() != dst.sizes()) {
      throw InputError(fmt::format("tensor '{}' has shape {} in checkpoint but {} in model", name,
                                   fmt::join(src.sizes(), "x"), fmt::join(dst.sizes(), "x")));
    }
    dst.copy_(src);
  };
  for (auto& p : module.named_parameters(true)) copy_into(p.key(), p.value());
  for (auto& b : module.named_buffers(true)) copy_into(b.key(), b.value());
}

void add_adam_state(Checkpoint& ckpt, torch::optim::Adam& optimizer,
                    const std::vector<torch::Tensor>& params, const std::string& prefix) {
  auto& state = optimizer.state();
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto it = state.find(params[i].unsafeGetTensorImpl());
    if (it == state.end()) continue;
    auto& s = static_cast<torch::optim::AdamParamState&>(*it->second);
    const std::string base = fmt::format("{}{}.", prefix, i);
    ckpt.tensors.emplace_back(base + "step", torch::tensor({s.step()}, torch::kInt64));
    ckpt.tensors.emplace_back(base + "exp_avg", s.exp_avg());
    ckpt.tensors.emplace_back(base + "exp_avg_sq", s.exp_avg_sq());
  }
}

void load_adam_state(torch::optim::Adam& optimizer, const std::vector<torch::Tensor>& params,
                     const Checkpoint& ckpt, const std::string& prefix) {
  auto& state = optimizer.state();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const std::string base = fmt::format("{}{}.", prefix, i);
    if (!ckpt.has_tensor(base + "step")) continue;
    auto s = std::make_unique<torch::optim::AdamParamState>();
    s->step(ckpt.tensor(base + "step").item<int64_t>());
    s->exp_avg(ckpt.tensor(base + "exp_avg").clone());
    s->exp_avg_sq(ckpt.tensor(base + "exp_avg_sq").clone());
    state[params[i].unsafeGetTensorImpl()] = std::move(s);
  }
}

}  // namespace sim2real
