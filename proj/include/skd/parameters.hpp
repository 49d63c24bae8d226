#pragma once

#include "skd/autograd.hpp"
#include "skd/nn_ops.hpp"
#include "skd/rng.hpp"

#include <map>
#include <memory>
#include <string>
#include <vector>

namespace skd {

struct StoreMetadata {
  int stage = 0;
  std::string ablation;
  std::int64_t iteration = 0;
  // Key prefixes that the distilled inference path never reads.
  std::vector<std::string> removable_prefixes;

  bool operator==(const StoreMetadata&) const = default;
};

/// Named parameter arrays keyed by module path, e.g. `embed.unit1.conv2.weight`.
/// Each entry is a persistent autograd leaf; batch-norm running statistics are
/// stored alongside as non-trainable entries. Move-only; use clone() to copy.
class ParameterStore {
 public:
  struct Entry {
    std::shared_ptr<Node<float>> node;
    bool trainable = true;
  };

  ParameterStore() = default;
  ParameterStore(ParameterStore&&) = default;
  ParameterStore& operator=(ParameterStore&&) = default;
  ParameterStore(const ParameterStore&) = delete;
  ParameterStore& operator=(const ParameterStore&) = delete;

  ParameterStore clone() const;

  void insert(const std::string& key, Tensorf value, bool trainable = true);
  bool contains(const std::string& key) const { return entries_.count(key) != 0; }
  std::size_t size() const { return entries_.size(); }

  Varf var(const std::string& key) const;
  Tensorf& tensor(const std::string& key);
  const Tensorf& tensor(const std::string& key) const;
  bool trainable(const std::string& key) const;

  std::vector<std::string> keys() const;
  std::vector<std::string> keys_with_prefix(const std::string& prefix) const;
  std::size_t erase_prefix(const std::string& prefix);

  void zero_grad();

  const std::map<std::string, Entry>& entries() const { return entries_; }

  StoreMetadata& metadata() { return metadata_; }
  const StoreMetadata& metadata() const { return metadata_; }

 private:
  const Entry& entry(const std::string& key) const;

  std::map<std::string, Entry> entries_;
  StoreMetadata metadata_;
};

struct KeyDiff {
  std::vector<std::string> missing;     // expected but absent
  std::vector<std::string> unexpected;  // present but not expected
  std::vector<std::string> mismatched;  // present with a different shape

  bool empty() const { return missing.empty() && unexpected.empty() && mismatched.empty(); }
  std::string str() const;
};

// Compares a store against a reference layout (keys and shapes only).
KeyDiff diff_layout(const ParameterStore& actual, const ParameterStore& expected);

// Parameter declaration helpers. Convolutions use He-normal initialization.
void declare_conv(ParameterStore& store, const std::string& prefix, int in, int out, int kernel, bool bias,
                  Rng& rng);
void declare_batch_norm(ParameterStore& store, const std::string& prefix, int channels);
void declare_prelu(ParameterStore& store, const std::string& prefix, int channels);

struct ForwardContext {
  ParameterStore& params;
  bool training = false;
};

Varf apply_conv(ForwardContext& ctx, const std::string& prefix, const Varf& x, Conv2dSpec spec = {});
Varf apply_batch_norm(ForwardContext& ctx, const std::string& prefix, const Varf& x);
Varf apply_prelu(ForwardContext& ctx, const std::string& prefix, const Varf& x);

// Kernel size of a declared convolution.
int conv_kernel(const ParameterStore& store, const std::string& prefix);

}  // namespace skd
