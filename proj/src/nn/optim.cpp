// SPDX-License-Identifier: Apache-2.0
#include "bevseg/nn/optim.hpp"

#include <cmath>

namespace bevseg::nn {

double LrSchedule::at(int64_t step) const {
  if (warmup_steps > 0 && step < warmup_steps)
    return base * static_cast<double>(step + 1) / static_cast<double>(warmup_steps);
  if (!cosine) return base;
  const double span = static_cast<double>(std::max<int64_t>(1, total_steps - warmup_steps));
  const double p = std::min(1.0, static_cast<double>(step - warmup_steps) / span);
  return base * 0.5 * (1.0 + std::cos(M_PI * p));
}

void Lion::attach(const ParamRefs& params) {
  params_ = params;
  m_.clear();
  for (Param* p : params_) m_.emplace_back(p->w.shape());
}

void Lion::step(double lr) {
  for (size_t i = 0; i < params_.size(); ++i) {
    Param& p = *params_[i];
    Tensor& m = m_[i];
    const float flr = static_cast<float>(lr);
    const float fb1 = static_cast<float>(b1_), fb2 = static_cast<float>(b2_);
    const float fwd = p.decay ? static_cast<float>(wd_) : 0.0f;
    for (int64_t j = 0; j < p.w.numel(); ++j) {
      const float c = fb1 * m[j] + (1.0f - fb1) * p.g[j];
      const float u = c > 0.0f ? 1.0f : (c < 0.0f ? -1.0f : 0.0f);
      p.w[j] -= flr * (u + fwd * p.w[j]);
      m[j] = fb2 * m[j] + (1.0f - fb2) * p.g[j];
    }
  }
}

void Lion::export_state(std::map<std::string, Tensor>& out) const {
  for (size_t i = 0; i < params_.size(); ++i) out["lion.m." + params_[i]->name] = m_[i];
}

void Lion::import_state(const std::map<std::string, Tensor>& in) {
  for (size_t i = 0; i < params_.size(); ++i) {
    auto it = in.find("lion.m." + params_[i]->name);
    if (it != in.end()) {
      require(it->second.numel() == m_[i].numel(), "Lion: state shape mismatch");
      m_[i] = it->second;
    }
  }
}

void AdamW::attach(const ParamRefs& params) {
  params_ = params;
  m_.clear();
  v_.clear();
  t_ = 0;
  for (Param* p : params_) {
    m_.emplace_back(p->w.shape());
    v_.emplace_back(p->w.shape());
  }
}

void AdamW::step(double lr) {
  ++t_;
  const double bc1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
  for (size_t i = 0; i < params_.size(); ++i) {
    Param& p = *params_[i];
    const float fwd = p.decay ? static_cast<float>(wd_) : 0.0f;
    for (int64_t j = 0; j < p.w.numel(); ++j) {
      m_[i][j] = static_cast<float>(b1_ * m_[i][j] + (1 - b1_) * p.g[j]);
      v_[i][j] = static_cast<float>(b2_ * v_[i][j] + (1 - b2_) * p.g[j] * p.g[j]);
      const double mh = m_[i][j] / bc1;
      const double vh = v_[i][j] / bc2;
      p.w[j] -= static_cast<float>(lr * (mh / (std::sqrt(vh) + eps_) + fwd * p.w[j]));
    }
  }
}

void AdamW::export_state(std::map<std::string, Tensor>& out) const {
  for (size_t i = 0; i < params_.size(); ++i) {
    out["adamw.m." + params_[i]->name] = m_[i];
    out["adamw.v." + params_[i]->name] = v_[i];
  }
  Tensor t({1});
  t[0] = static_cast<float>(t_);
  out["adamw.t"] = t;
}

void AdamW::import_state(const std::map<std::string, Tensor>& in) {
  for (size_t i = 0; i < params_.size(); ++i) {
    auto im = in.find("adamw.m." + params_[i]->name);
    auto iv = in.find("adamw.v." + params_[i]->name);
    if (im != in.end()) m_[i] = im->second;
    if (iv != in.end()) v_[i] = iv->second;
  }
  auto it = in.find("adamw.t");
  if (it != in.end()) t_ = static_cast<int64_t>(it->second[0]);
}

Optimizer::Optimizer(const std::string& kind, double weight_decay)
    : kind_(kind), lion_(0.9, 0.99, weight_decay), adamw_(0.9, 0.999, 1e-8, weight_decay) {
  require(kind == "lion" || kind == "adamw", "Optimizer: kind must be lion or adamw");
}

void Optimizer::attach(const ParamRefs& params) {
  if (kind_ == "lion") lion_.attach(params);
  else adamw_.attach(params);
}

void Optimizer::step(double lr) {
  if (kind_ == "lion") lion_.step(lr);
  else adamw_.step(lr);
}

void Optimizer::export_state(std::map<std::string, Tensor>& out) const {
  if (kind_ == "lion") lion_.export_state(out);
  else adamw_.export_state(out);
}

void Optimizer::import_state(const std::map<std::string, Tensor>& in) {
  if (kind_ == "lion") lion_.import_state(in);
  else adamw_.import_state(in);
}

}  // namespace bevseg::nn
