#include "c2d/params.hpp"

#include <cmath>

#include "c2d/errors.hpp"

namespace c2d {

void ParamTable::add(std::string name, const Tensor& t) {
  if (find(name) != nullptr) throw Error("duplicate parameter name " + name);
  entries_.emplace_back(std::move(name), t);
}

const Tensor* ParamTable::find(const std::string& name) const {
  for (const auto& [n, t] : entries_)
    if (n == name) return &t;
  return nullptr;
}

const Tensor& ParamTable::at(const std::string& name) const {
  const Tensor* t = find(name);
  if (t == nullptr) throw Error("unknown parameter " + name);
  return *t;
}

std::vector<Tensor> ParamTable::tensors() const {
  std::vector<Tensor> out;
  out.reserve(entries_.size());
  for (const auto& [n, t] : entries_) out.push_back(t);
  return out;
}

std::size_t ParamTable::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : entries_) n += t.numel();
  return n;
}

void ParamTable::zero_grad() {
  for (auto& [name, t] : entries_) t.zero_grad();
}

Tensor Initializer::uniform(Shape shape, std::size_t fan_in) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<float> values(shape_numel(shape));
  for (auto& v : values) v = static_cast<float>(dist(rng_));
  return Tensor::from(std::move(shape), std::move(values), true);
}

Tensor Initializer::ones(Shape shape) { return Tensor::full(std::move(shape), 1.0f, true); }
Tensor Initializer::zeros(Shape shape) { return Tensor::zeros(std::move(shape), true); }

}  // namespace c2d
