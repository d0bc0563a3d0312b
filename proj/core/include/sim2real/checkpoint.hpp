#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>
#include <torch/torch.h>

namespace sim2real {

std::string library_version();

// Self-describing parameter container:
//   8-byte magic "S2RCKPT1", u64 little-endian header length, JSON header,
//   then raw little-endian tensor payloads in header order.
// The header records the kind, library version, free-form metadata (configs,
// direction, epoch) and each tensor's name, dtype, shape and byte offset.
struct Checkpoint {
  std::string kind;
  nlohmann::json meta = nlohmann::json::object();
  std::vector<std::pair<std::string, torch::Tensor>> tensors;

  const torch::Tensor& tensor(const std::string& name) const;
  bool has_tensor(const std::string& name) const;
};

// Written via temp file + rename.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);
// Reads only the JSON header (kind, meta, library_version).
nlohmann::json read_checkpoint_header(const std::filesystem::path& path);

// Parameters and buffers, prefixed with "<prefix>".
void add_module_state(Checkpoint& ckpt, const torch::nn::Module& module, const std::string& prefix = "");
// Copies matching tensors into the module. Throws InputError on a missing name
// or shape mismatch.
void load_module_state(torch::nn::Module& module, const Checkpoint& ckpt, const std::string& prefix = "");

// Adam moments and step counts for the given parameter list, in order.
void add_adam_state(Checkpoint& ckpt, torch::optim::Adam& optimizer,
                    const std::vector<torch::Tensor>& params, const std::string& prefix);
void load_adam_state(torch::optim::Adam& optimizer, const std::vector<torch::Tensor>& params,
                     const Checkpoint& ckpt, const std::string& prefix);

}  // namespace sim2real
