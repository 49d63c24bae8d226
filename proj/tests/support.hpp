#pragma once

#include "skd/autograd.hpp"
#include "skd/error.hpp"
#include "skd/losses.hpp"
#include "skd/rng.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace skd::test {

inline Tensord random_tensor(Shape s, Rng& rng, double scale = 1.0) {
  Tensord t(s);
  for (std::int64_t i = 0; i < t.numel(); ++i) t.data()[i] = scale * rng.normal();
  return t;
}

inline Tensorf random_tensorf(Shape s, Rng& rng, double scale = 1.0) { return random_tensor(s, rng, scale).cast<float>(); }

inline Tensord random_unit(Shape s, Rng& rng) {
  Tensord t(s);
  for (std::int64_t i = 0; i < t.numel(); ++i) t.data()[i] = rng.uniform();
  return t;
}

inline Tensord random_binary(Shape s, Rng& rng) {
  Tensord t(s);
  for (std::int64_t i = 0; i < t.numel(); ++i) t.data()[i] = rng.coin() ? 1.0 : 0.0;
  return t;
}

// Element-wise |a - n| / max(|a|, |n|, floor).
inline double relative_error(double a, double n, double floor = 1e-6) {
  return std::abs(a - n) / std::max({std::abs(a), std::abs(n), floor});
}

/// Largest relative error between the autograd gradient of `f` and central
/// differences with step h, over every element of every input.
inline double gradient_check(const std::function<Vard(const std::vector<Vard>&)>& f, std::vector<Tensord> inputs,
                             double h = 1e-5) {
  std::vector<Vard> vars;
  for (const auto& t : inputs) vars.emplace_back(t, true);
  backward(f(vars));
  double worst = 0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const Tensord analytic = vars[k].grad().empty() ? Tensord(inputs[k].shape()) : vars[k].grad();
    for (std::int64_t i = 0; i < inputs[k].numel(); ++i) {
      const double saved = inputs[k].data()[i];
      auto eval = [&](double v) {
        inputs[k].data()[i] = v;
        std::vector<Vard> probe;
        for (const auto& t : inputs) probe.emplace_back(t, false);
        NoGradGuard guard;
        return f(probe).value().data()[0];
      };
      const double numeric = (eval(saved + h) - eval(saved - h)) / (2 * h);
      inputs[k].data()[i] = saved;
      worst = std::max(worst, relative_error(analytic.data()[i], numeric));
    }
  }
  return worst;
}

/// Same check for a plain function returning a value and its gradient.
inline double gradient_check_array(const std::function<double(const ArrayX<double>&, ArrayX<double>*)>& f,
                                   ArrayX<double> x, double h = 1e-5) {
  ArrayX<double> g;
  f(x, &g);
  double worst = 0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + h;
    const double up = f(x, nullptr);
    x[i] = saved - h;
    const double down = f(x, nullptr);
    x[i] = saved;
    worst = std::max(worst, relative_error(g[i], (up - down) / (2 * h)));
  }
  return worst;
}

// A fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("skd_" + tag + "_" + std::to_string(std::hash<std::string>{}(tag) ^ std::uintptr_t(this)));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string str(const std::string& child = "") const { return (path_ / child).string(); }

 private:
  std::filesystem::path path_;
};

}  // namespace skd::test
