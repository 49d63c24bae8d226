#include "skd/parameters.hpp"

#include "skd/error.hpp"

#include <cmath>
#include <sstream>

namespace skd {

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) return 0;
  // Rejection sampling keeps the result exactly uniform.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t v;
  do {
    v = engine_();
  } while (v >= limit);
  return v % n;
}

double Rng::normal() {
  double u1 = uniform();
  while (u1 <= 0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

ParameterStore ParameterStore::clone() const {
  ParameterStore out;
  for (const auto& [key, e] : entries_) out.insert(key, e.node->value, e.trainable);
  out.metadata_ = metadata_;
  return out;
}

void ParameterStore::insert(const std::string& key, Tensorf value, bool trainable) {
  auto node = std::make_shared<Node<float>>();
  node->value = std::move(value);
  node->requires_grad = trainable;
  entries_[key] = Entry{std::move(node), trainable};
}

const ParameterStore::Entry& ParameterStore::entry(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) throw MissingParameterError("missing parameter '" + key + "'");
  return it->second;
}

Varf ParameterStore::var(const std::string& key) const { return Varf(entry(key).node); }

Tensorf& ParameterStore::tensor(const std::string& key) { return entry(key).node->value; }

const Tensorf& ParameterStore::tensor(const std::string& key) const { return entry(key).node->value; }

bool ParameterStore::trainable(const std::string& key) const { return entry(key).trainable; }

std::vector<std::string> ParameterStore::keys() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& kv : entries_) out.push_back(kv.first);
  return out;
}

std::vector<std::string> ParameterStore::keys_with_prefix(const std::string& prefix) const {
  std::vector<std::string> out;
  for (auto it = entries_.lower_bound(prefix); it != entries_.end() && it->first.starts_with(prefix); ++it)
    out.push_back(it->first);
  return out;
}

std::size_t ParameterStore::erase_prefix(const std::string& prefix) {
  std::size_t n = 0;
  for (auto it = entries_.lower_bound(prefix); it != entries_.end() && it->first.starts_with(prefix);) {
    it = entries_.erase(it);
    ++n;
  }
  return n;
}

void ParameterStore::zero_grad() {
  for (auto& kv : entries_) kv.second.node->zero_grad();
}

std::string KeyDiff::str() const {
  std::ostringstream os;
  auto list = [&os](const char* label, const std::vector<std::string>& keys) {
    if (keys.empty()) return;
    os << label << ":";
    for (const auto& k : keys) os << " " << k;
    os << "\n";
  };
  list("missing", missing);
  list("unexpected", unexpected);
  list("shape mismatch", mismatched);
  return os.str();
}

KeyDiff diff_layout(const ParameterStore& actual, const ParameterStore& expected) {
  KeyDiff diff;
  for (const auto& [key, e] : expected.entries()) {
    if (!actual.contains(key))
      diff.missing.push_back(key);
    else if (!(actual.tensor(key).shape() == e.node->value.shape()))
      diff.mismatched.push_back(key + " (" + actual.tensor(key).shape().str() + " vs " +
                                e.node->value.shape().str() + ")");
  }
  for (const auto& kv : actual.entries())
    if (!expected.contains(kv.first)) diff.unexpected.push_back(kv.first);
  return diff;
}

void declare_conv(ParameterStore& store, const std::string& prefix, int in, int out, int kernel, bool bias,
                  Rng& rng) {
  Tensorf w(Shape{out, in, kernel, kernel});
  const double stddev = std::sqrt(2.0 / double(in * kernel * kernel));
  for (std::int64_t i = 0; i < w.numel(); ++i) w.data()[i] = float(rng.normal() * stddev);
  store.insert(prefix + ".weight", std::move(w));
  if (bias) store.insert(prefix + ".bias", Tensorf(Shape{1, out, 1, 1}));
}

void declare_batch_norm(ParameterStore& store, const std::string& prefix, int channels) {
  const Shape s{1, channels, 1, 1};
  store.insert(prefix + ".weight", Tensorf(s, 1.0f));
  store.insert(prefix + ".bias", Tensorf(s));
  store.insert(prefix + ".running_mean", Tensorf(s), false);
  store.insert(prefix + ".running_var", Tensorf(s, 1.0f), false);
}

void declare_prelu(ParameterStore& store, const std::string& prefix, int channels) {
  store.insert(prefix + ".weight", Tensorf(Shape{1, channels, 1, 1}, 0.25f));
}

Varf apply_conv(ForwardContext& ctx, const std::string& prefix, const Varf& x, Conv2dSpec spec) {
  const std::string bias_key = prefix + ".bias";
  Varf bias = ctx.params.contains(bias_key) ? ctx.params.var(bias_key) : Varf();
  return conv2d(x, ctx.params.var(prefix + ".weight"), bias, spec);
}

Varf apply_batch_norm(ForwardContext& ctx, const std::string& prefix, const Varf& x) {
  Tensorf& mean = ctx.params.tensor(prefix + ".running_mean");
  Tensorf& var = ctx.params.tensor(prefix + ".running_var");
  return batch_norm(x, ctx.params.var(prefix + ".weight"), ctx.params.var(prefix + ".bias"), &mean, &var,
                    ctx.training);
}

Varf apply_prelu(ForwardContext& ctx, const std::string& prefix, const Varf& x) {
  return prelu(x, ctx.params.var(prefix + ".weight"));
}

int conv_kernel(const ParameterStore& store, const std::string& prefix) {
  return store.tensor(prefix + ".weight").shape().h;
}

}  // namespace skd
