#pragma once

#include <map>
#include <optional>
#include <string>

#include "vectorworld/diffcore/graph.hpp"

namespace vw::nn {

using diff::Graph;
using diff::Tensor;

enum class Init { ScaledNormal, Zeros, Ones };

// Declares parameters on first use with values seeded by
// hash(master_seed, name), so creation order never changes init.
class Builder {
public:
    Builder(Graph& g, uint64_t seed) : g_(g), seed_(seed) {}

    Graph& graph() { return g_; }

    int param(const std::string& name, int rows, int cols, Init init = Init::ScaledNormal);

    int linear(const std::string& name, int x, int out_dim);
    int linear_nobias(const std::string& name, int x, int out_dim,
                      Init init = Init::ScaledNormal);
    int mlp2(const std::string& name, int x, int hidden, int out_dim);

    // layer-normalize then affine (gamma ones, beta zeros)
    int layernorm_affine(const std::string& name, int x);

    // pair selection constants for an (nq keys nk) table, cached per graph
    int pair_src(int nq, int nk);  // (nq*nk) x nq
    int pair_dst(int nq, int nk);  // (nq*nk) x nk

private:
    Graph& g_;
    uint64_t seed_;
    std::map<std::pair<int, int>, std::pair<int, int>> pair_cache_;
};

struct AttnSpec {
    int width = 64;
    int heads = 4;
    int edge_proj = 8;
    int type_dim = 0;        // extra per-pair one-hot features
    bool edge_bias = true;   // additive logit bias B(e)
    bool value_gate = true;  // multiplicative 1+tanh gate G(e)
};

// Edge-gated relational attention. Pair features are recomputed from
// the current tokens; bias and gate parameters are zero-initialized so
// the module starts as exact standard attention.
//   q_tokens: nq x width, kv_tokens: nk x width
//   edge_types: optional (nq*nk) x type_dim input
//   attn_mask: optional nq x nk additive mask (0 or -1e9)
int relational_attention(Builder& b, const std::string& name, int q_tokens, int kv_tokens,
                         int nq, int nk, std::optional<int> edge_types,
                         std::optional<int> attn_mask, const AttnSpec& spec);

// token MLP with residual and pre-LN: x + mlp(ln(x))
int transformer_ffn(Builder& b, const std::string& name, int x, int width);

// pre-LN residual attention stage: q + attn(ln(q), ln(kv))
int attention_stage(Builder& b, const std::string& name, int q_tokens, int kv_tokens,
                    int nq, int nk, std::optional<int> edge_types, std::optional<int> attn_mask,
                    const AttnSpec& spec);

// sinusoidal features computed host-side (the closed primitive set has
// no trig); feed as an input and use time_feature_tangent for d/dt
int time_feature_dim(int freqs);
Tensor time_features(double t, int freqs);
Tensor time_feature_tangent(double t, int freqs);  // d features / dt

}  // namespace vw::nn
