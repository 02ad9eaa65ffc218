#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "c2d/tensor.hpp"

namespace c2d {

// Ordered table of named learnable tensors. Insertion order is the canonical
// order for optimizers and checkpoints.
class ParamTable {
 public:
  void add(std::string name, const Tensor& t);
  const Tensor* find(const std::string& name) const;
  const Tensor& at(const std::string& name) const;
  const std::vector<std::pair<std::string, Tensor>>& entries() const { return entries_; }
  std::vector<Tensor> tensors() const;
  std::size_t scalar_count() const;
  void zero_grad();

 private:
  std::vector<std::pair<std::string, Tensor>> entries_;
};

// Uniform fan-in scaled initialization, U(-1/sqrt(fan_in), 1/sqrt(fan_in)),
// for weights and biases alike.
class Initializer {
 public:
  explicit Initializer(std::uint64_t seed) : rng_(seed) {}
  Tensor uniform(Shape shape, std::size_t fan_in);
  static Tensor ones(Shape shape);
  static Tensor zeros(Shape shape);

 private:
  std::mt19937_64 rng_;
};

}  // namespace c2d
