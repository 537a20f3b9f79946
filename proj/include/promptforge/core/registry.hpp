// Copyright 2026 The PromptForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <map>
#include <memory>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace promptforge {

using MetricFn = std::function<double(std::string_view predicted, std::string_view gold)>;

/// A named evaluation function m(predicted, gold) in [0,1].
class Metric {
 public:
  Metric(std::string name, MetricFn fn) : name_(std::move(name)), fn_(std::move(fn)) {}

  const std::string& name() const noexcept { return name_; }

  /// Throws ContractError when the wrapped function leaves [0,1].
  double operator()(std::string_view predicted, std::string_view gold) const;

 private:
  std::string name_;
  MetricFn fn_;
};

/// Loss over answer logits (one row per gold token, vocab columns).
using LossValueFn =
    std::function<double(const Eigen::MatrixXd& answer_logits, std::span<const int> gold_ids)>;
/// d loss / d answer_logits, same shape as the logits.
using LossGradientFn = std::function<Eigen::MatrixXd(const Eigen::MatrixXd& answer_logits,
                                                     std::span<const int> gold_ids)>;

class Loss {
 public:
  Loss(std::string name, LossValueFn value, LossGradientFn gradient = {})
      : name_(std::move(name)), value_(std::move(value)), gradient_(std::move(gradient)) {}

  const std::string& name() const noexcept { return name_; }
  bool differentiable() const noexcept { return static_cast<bool>(gradient_); }

  /// Throws ContractError on a negative or non-finite value.
  double value(const Eigen::MatrixXd& answer_logits, std::span<const int> gold_ids) const;
  /// Throws ContractError naming the loss when no gradient was registered or
  /// the gradient has the wrong shape.
  Eigen::MatrixXd gradient(const Eigen::MatrixXd& answer_logits,
                           std::span<const int> gold_ids) const;

 private:
  std::string name_;
  LossValueFn value_;
  LossGradientFn gradient_;
};

namespace detail {

template <typename Entry>
class NamedRegistry {
 public:
  const Entry& add(Entry entry);
  const Entry& resolve(std::string_view name) const;
  bool contains(std::string_view name) const;
  std::vector<std::string> names() const;

 private:
  mutable std::shared_mutex mutex_;
  std::map<std::string, std::unique_ptr<const Entry>, std::less<>> entries_;
};

}  // namespace detail

/// Process-wide metric registry; "exact_match" and "numeric_match" are built in.
class MetricRegistry {
 public:
  static MetricRegistry& global();

  /// Throws RegistryError on a duplicate name. The returned reference stays
  /// valid for the life of the process.
  const Metric& add(std::string name, MetricFn fn);
  /// Throws RegistryError for unknown names.
  const Metric& resolve(std::string_view name) const;
  bool contains(std::string_view name) const;
  std::vector<std::string> names() const;

 private:
  MetricRegistry();
  detail::NamedRegistry<Metric> registry_;
};

/// Process-wide loss registry; "cross_entropy" is built in.
class LossRegistry {
 public:
  static LossRegistry& global();

  const Loss& add(std::string name, LossValueFn value, LossGradientFn gradient = {});
  const Loss& resolve(std::string_view name) const;
  bool contains(std::string_view name) const;
  std::vector<std::string> names() const;

 private:
  LossRegistry();
  detail::NamedRegistry<Loss> registry_;
};

inline const Metric& register_metric(std::string name, MetricFn fn) {
  return MetricRegistry::global().add(std::move(name), std::move(fn));
}

inline const Loss& register_loss(std::string name, LossValueFn value, LossGradientFn gradient = {}) {
  return LossRegistry::global().add(std::move(name), std::move(value), std::move(gradient));
}

/// Mean token cross-entropy of the gold ids under row-wise softmax.
double cross_entropy(const Eigen::MatrixXd& answer_logits, std::span<const int> gold_ids);
Eigen::MatrixXd cross_entropy_gradient(const Eigen::MatrixXd& answer_logits,
                                       std::span<const int> gold_ids);

}  // namespace promptforge
