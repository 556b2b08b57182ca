// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>
#include <vector>

#include "bevseg/nn/param.hpp"

namespace bevseg::nn {

// Linear warm-up into (optionally) cosine decay.
struct LrSchedule {
  double base = 1e-3;
  int64_t warmup_steps = 0;
  int64_t total_steps = 1;
  bool cosine = true;

  double at(int64_t step) const;
};

// Sign-momentum optimizer with decoupled weight decay. Update:
//   u      = sign(beta1 * m + (1 - beta1) * g)
//   w     -= lr * (u + wd * w)          (wd only on decay-marked params)
//   m      = beta2 * m + (1 - beta2) * g
class Lion {
 public:
  explicit Lion(double beta1 = 0.9, double beta2 = 0.99, double weight_decay = 0.0)
      : b1_(beta1), b2_(beta2), wd_(weight_decay) {}

  void attach(const ParamRefs& params);
  void step(double lr);

  void export_state(std::map<std::string, Tensor>& out) const;
  void import_state(const std::map<std::string, Tensor>& in);

 private:
  double b1_, b2_, wd_;
  ParamRefs params_;
  std::vector<Tensor> m_;
};

// AdamW, kept as the configuration fallback.
class AdamW {
 public:
  explicit AdamW(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8,
                 double weight_decay = 0.0)
      : b1_(beta1), b2_(beta2), eps_(eps), wd_(weight_decay) {}

  void attach(const ParamRefs& params);
  void step(double lr);

  void export_state(std::map<std::string, Tensor>& out) const;
  void import_state(const std::map<std::string, Tensor>& in);

 private:
  double b1_, b2_, eps_, wd_;
  int64_t t_ = 0;
  ParamRefs params_;
  std::vector<Tensor> m_, v_;
};

// Either optimizer behind the config switch.
class Optimizer {
 public:
  Optimizer(const std::string& kind, double weight_decay);
  void attach(const ParamRefs& params);
  void step(double lr);
  void export_state(std::map<std::string, Tensor>& out) const;
  void import_state(const std::map<std::string, Tensor>& in);
  const std::string& kind() const { return kind_; }

 private:
  std::string kind_;
  Lion lion_;
  AdamW adamw_;
};

}  // namespace bevseg::nn
