// Copyright 2026 The PromptForge Authors
// SPDX-License-Identifier: Apache-2.0

#include "promptforge/core/registry.hpp"

#include <cmath>
#include <mutex>

#include "promptforge/core/error.hpp"
#include "promptforge/eval/metrics.hpp"

namespace promptforge {

double Metric::operator()(std::string_view predicted, std::string_view gold) const {
  const double v = fn_(predicted, gold);
  if (!(v >= 0.0 && v <= 1.0)) {
    throw ContractError("metric '" + name_ + "' returned " + std::to_string(v) +
                        ", outside [0,1]");
  }
  return v;
}

double Loss::value(const Eigen::MatrixXd& logits, std::span<const int> gold) const {
  const double v = value_(logits, gold);
  if (!(v >= 0.0) || !std::isfinite(v)) {
    throw ContractError("loss '" + name_ + "' returned " + std::to_string(v) +
                        ", expected a finite value >= 0");
  }
  return v;
}

Eigen::MatrixXd Loss::gradient(const Eigen::MatrixXd& logits, std::span<const int> gold) const {
  if (!gradient_) {
    throw ContractError("loss '" + name_ +
                        "' is not differentiable: no gradient with respect to the logits was "
                        "registered, so it cannot drive backpropagation");
  }
  Eigen::MatrixXd g = gradient_(logits, gold);
  if (g.rows() != logits.rows() || g.cols() != logits.cols()) {
    throw ContractError("loss '" + name_ + "' gradient has shape " + std::to_string(g.rows()) +
                        "x" + std::to_string(g.cols()) + ", expected " +
                        std::to_string(logits.rows()) + "x" + std::to_string(logits.cols()));
  }
  if (!g.allFinite()) throw ContractError("loss '" + name_ + "' produced a non-finite gradient");
  return g;
}

namespace detail {

template <typename Entry>
const Entry& NamedRegistry<Entry>::add(Entry entry) {
  std::unique_lock lock(mutex_);
  const std::string name = entry.name();
  if (entries_.count(name) != 0) throw RegistryError("'" + name + "' is already registered");
  auto [it, ok] = entries_.emplace(name, std::make_unique<const Entry>(std::move(entry)));
  return *it->second;
}

template <typename Entry>
const Entry& NamedRegistry<Entry>::resolve(std::string_view name) const {
  std::shared_lock lock(mutex_);
  auto it = entries_.find(name);
  if (it == entries_.end()) throw RegistryError("'" + std::string(name) + "' is not registered");
  return *it->second;
}

template <typename Entry>
bool NamedRegistry<Entry>::contains(std::string_view name) const {
  std::shared_lock lock(mutex_);
  return entries_.find(name) != entries_.end();
}

template <typename Entry>
std::vector<std::string> NamedRegistry<Entry>::names() const {
  std::shared_lock lock(mutex_);
  std::vector<std::string> out;
  for (const auto& [k, v] : entries_) out.push_back(k);
  return out;
}

template class NamedRegistry<Metric>;
template class NamedRegistry<Loss>;

}  // namespace detail

MetricRegistry::MetricRegistry() {
  registry_.add(Metric("exact_match", eval::exact_match));
  registry_.add(Metric("numeric_match", [](std::string_view p, std::string_view g) {
    return eval::numeric_match(p, g, 1e-6);
  }));
}

MetricRegistry& MetricRegistry::global() {
  static MetricRegistry instance;
  return instance;
}

const Metric& MetricRegistry::add(std::string name, MetricFn fn) {
  return registry_.add(Metric(std::move(name), std::move(fn)));
}
const Metric& MetricRegistry::resolve(std::string_view name) const {
  return registry_.resolve(name);
}
bool MetricRegistry::contains(std::string_view name) const { return registry_.contains(name); }
std::vector<std::string> MetricRegistry::names() const { return registry_.names(); }

LossRegistry::LossRegistry() {
  registry_.add(Loss("cross_entropy", cross_entropy, cross_entropy_gradient));
}

LossRegistry& LossRegistry::global() {
  static LossRegistry instance;
  return instance;
}

const Loss& LossRegistry::add(std::string name, LossValueFn value, LossGradientFn gradient) {
  return registry_.add(Loss(std::move(name), std::move(value), std::move(gradient)));
}
const Loss& LossRegistry::resolve(std::string_view name) const { return registry_.resolve(name); }
bool LossRegistry::contains(std::string_view name) const { return registry_.contains(name); }
std::vector<std::string> LossRegistry::names() const { return registry_.names(); }

namespace {

void check_gold(const Eigen::MatrixXd& logits, std::span<const int> gold) {
  if (static_cast<std::size_t>(logits.rows()) != gold.size() || gold.empty()) {
    throw ContractError("answer logits have " + std::to_string(logits.rows()) + " rows for " +
                        std::to_string(gold.size()) + " gold tokens");
  }
  for (int g : gold) {
    if (g < 0 || g >= logits.cols()) throw ContractError("gold token id out of vocabulary");
  }
}

}  // namespace

double cross_entropy(const Eigen::MatrixXd& logits, std::span<const int> gold) {
  check_gold(logits, gold);
  double total = 0.0;
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double m = logits.row(r).maxCoeff();
    const double lse = m + std::log((logits.row(r).array() - m).exp().sum());
    total += lse - logits(r, gold[static_cast<std::size_t>(r)]);
  }
  // lse >= any logit, so only round-off can push this below zero
  return std::max(0.0, total / static_cast<double>(logits.rows()));
}

Eigen::MatrixXd cross_entropy_gradient(const Eigen::MatrixXd& logits, std::span<const int> gold) {
  check_gold(logits, gold);
  Eigen::MatrixXd g(logits.rows(), logits.cols());
  const double inv_n = 1.0 / static_cast<double>(logits.rows());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double m = logits.row(r).maxCoeff();
    Eigen::RowVectorXd p = (logits.row(r).array() - m).exp();
    p /= p.sum();
    p(gold[static_cast<std::size_t>(r)]) -= 1.0;
    g.row(r) = p * inv_n;
  }
  return g;
}

}  // namespace promptforge
