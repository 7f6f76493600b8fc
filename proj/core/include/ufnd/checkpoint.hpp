#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "ufnd/model.hpp"
#include "ufnd/rng.hpp"
#include "ufnd/tensor.hpp"
#include "ufnd/train_config.hpp"

namespace ufnd {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
// Checksum mismatch, truncation, or an unparseable header.
class CheckpointIntegrityError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};
class CheckpointVersionError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};

struct NamedTensor {
  std::string name;
  Tensor tensor;

  bool operator==(const NamedTensor&) const = default;
};

// File layout (little-endian):
//   "UFND" | u32 format version | u32 header length | header (JSON text)
//   | raw f32 tensor payloads | u32 CRC-32 over header and payloads
struct Checkpoint {
  static constexpr std::uint32_t format_version = 1;

  ModelConfig model;
  TrainConfig train;
  std::uint64_t vocab_hash = 0;
  std::string config_hash;

  // Model state tensors, then "adam.m.<param>" / "adam.v.<param>".
  std::vector<NamedTensor> tensors;
  std::uint64_t adam_step = 0;

  std::size_t epoch = 0;       // completed epochs
  std::size_t best_epoch = 0;  // 1-based, 0 when none
  double best_val_accuracy = -1.0;
  RngState dropout_rng;

  const NamedTensor* find(const std::string& name) const;
  bool operator==(const Checkpoint&) const = default;
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

std::vector<char> serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(const std::vector<char>& bytes);

// Copies model state (and optionally Adam moments) out of / into a model.
Checkpoint capture_state(Model<float>& model, const Adam<float>* adam);
void restore_state(Model<float>& model, Adam<float>* adam, const Checkpoint& ckpt);

}  // namespace ufnd
