// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "bevseg/nn/param.hpp"

namespace bevseg::nn {

// Linear map over a token matrix (rows are tokens).
class TokenLinear {
 public:
  TokenLinear() = default;
  TokenLinear(std::string name, int in, int out, bool zero_init = false);

  void init(Rng& rng);
  void params(ParamRefs& out);
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& dy);

  Param weight;  // [out, in]
  Param bias;    // [out]

 private:
  int in_ = 0, out_ = 0;
  bool zero_init_ = false;
  Tensor x_;
};

// Per-token layer normalization over the channel axis.
class TokenLayerNorm {
 public:
  TokenLayerNorm() = default;
  TokenLayerNorm(std::string name, int dim);

  void params(ParamRefs& out);
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& dy);

  Param gamma, beta;

 private:
  int dim_ = 0;
  Tensor xhat_;
  std::vector<float> invstd_;
};

// One pre-norm transformer block. Attention runs independently inside each
// length-H sequence; the learned positional table (one row per sequence
// position) enters the query/key path only, so the residual stream is exactly
// the input when the zero-initialized output projections have not moved yet.
class TransformerBlock {
 public:
  TransformerBlock() = default;
  TransformerBlock(const std::string& name, int dim, int heads, int ff_mult);

  void init(Rng& rng);
  void params(ParamRefs& out);

  // x: [T, dim] with T = num_seqs * seq_len, sequences contiguous.
  // pos: [seq_len, dim] shared positional table (owned by the transformer).
  Tensor forward(const Tensor& x, const Tensor& pos, int seq_len);
  Tensor backward(const Tensor& dy, Tensor& dpos);

 private:
  int dim_ = 0, heads_ = 0, head_dim_ = 0, ff_ = 0;
  TokenLayerNorm ln1_, ln2_;
  TokenLinear wq_, wk_, wv_, wo_, ff1_, ff2_;
  int seq_len_ = 0;
  Tensor q_, k_, v_, attn_;  // attn_: [S*heads, L, L] softmax weights
  Tensor ff_pre_;            // pre-GELU activations
  Tensor x_, x2_;
};

// Column-wise self-attention over feature maps: every (batch, width) column of
// the [N, C, H, W] input is treated as an independent length-H sequence with
// shared weights, so columns never exchange information.
class ColumnTransformer {
 public:
  ColumnTransformer() = default;
  ColumnTransformer(std::string name, int dim, int heads, int layers, int seq_len, int ff_mult = 4);

  void init(Rng& rng);
  void params(ParamRefs& out);

  Tensor forward(const Tensor& x);   // [N, C, H, W] -> same shape
  Tensor backward(const Tensor& dy);

  int seq_len() const { return seq_len_; }

  Param pos;  // [seq_len, dim]

 private:
  int dim_ = 0, seq_len_ = 0;
  std::vector<TransformerBlock> blocks_;
  std::vector<int> in_shape_;
};

}  // namespace bevseg::nn
