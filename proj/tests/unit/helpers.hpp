#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ufnd/optim.hpp"
#include "ufnd/rng.hpp"
#include "ufnd/tensor.hpp"
#include "ufnd/model.hpp"
#include "ufnd/textprep.hpp"
#include "ufnd/train_config.hpp"

namespace testing {

// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("ufnd_" + tag + "_" + std::to_string(::ufnd::fnv1a64(tag) ^ counter()++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  std::string file(const std::string& name) const { return (path_ / name).string(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  static std::uint64_t& counter() {
    static std::uint64_t c = 0;
    return c;
  }
  std::filesystem::path path_;
};

void write_file(const std::string& path, const std::string& text);
std::string read_file(const std::string& path);

template <typename T>
ufnd::BasicTensor<T> random_tensor(const ufnd::Shape& shape, ufnd::Rng& rng, double scale = 1.0) {
  ufnd::BasicTensor<T> t(shape);
  for (auto& v : t.storage()) v = static_cast<T>(scale * (2.0 * rng.uniform() - 1.0));
  return t;
}

// Sample of `len` real tokens (ids drawn from [3, vocab)) padded to max_len.
ufnd::EncodedSample make_sample(std::size_t len, std::size_t max_len, std::size_t vocab,
                                ufnd::Rng& rng, int label = 0);

template <typename T>
std::vector<ufnd::Parameter<T>*> ptrs(std::vector<ufnd::Parameter<T>>& ps) {
  std::vector<ufnd::Parameter<T>*> out;
  for (auto& p : ps) out.push_back(&p);
  return out;
}

// Synthetic marker task encoded with its own vocabulary.
struct ToyData {
  ufnd::Vocabulary vocab;
  ufnd::EncodedSet train;
  ufnd::EncodedSet val;
};
ToyData make_toy(std::size_t docs, double p_fake, double p_real, std::uint64_t seed,
                 std::size_t max_len = 24);

// Tiny model trained end to end (a frozen random encoder cannot surface the
// markers at this width).
ufnd::ModelConfig toy_model(std::size_t vocab_size, std::size_t max_len = 24);
ufnd::TrainConfig toy_train(std::size_t epochs, std::size_t batch_size, std::size_t max_len = 24);

}  // namespace testing
