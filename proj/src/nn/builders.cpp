#include "vectorworld/nn/builders.hpp"

#include <cmath>

#include "vectorworld/util/rng.hpp"

namespace vw::nn {

namespace {
uint64_t name_hash(uint64_t seed, const std::string& name) {
    uint64_t h = seed ^ 1469598103934665603ULL;
    for (char c : name) {
        h ^= static_cast<uint8_t>(c);
        h *= 1099511628211ULL;
    }
    return h;
}
}  // namespace

int Builder::param(const std::string& name, int rows, int cols, Init init) {
    auto store = g_.store();
    if (!store->has(name)) {
        Tensor t = Tensor::zeros(rows, cols);
        if (init == Init::ScaledNormal) {
            Rng rng(name_hash(seed_, name));
            double scale = 1.0 / std::sqrt(static_cast<double>(rows));
            for (size_t i = 0; i < t.size(); ++i) t[i] = scale * rng.normal();
        } else if (init == Init::Ones) {
            for (size_t i = 0; i < t.size(); ++i) t[i] = 1.0;
        }
        store->add(name, std::move(t));
    }
    return g_.param(name);
}

int Builder::linear(const std::string& name, int x, int out_dim) {
    int w = param(name + ".w", g_.cols(x), out_dim);
    int b = param(name + ".b", 1, out_dim, Init::Zeros);
    return g_.add(g_.matmul(x, w), b);
}

int Builder::linear_nobias(const std::string& name, int x, int out_dim, Init init) {
    int w = param(name + ".w", g_.cols(x), out_dim, init);
    return g_.matmul(x, w);
}

int Builder::mlp2(const std::string& name, int x, int hidden, int out_dim) {
    return linear(name + ".out", g_.tanh(linear(name + ".in", x, hidden)), out_dim);
}

int Builder::layernorm_affine(const std::string& name, int x) {
    int gamma = param(name + ".gamma", 1, g_.cols(x), Init::Ones);
    int beta = param(name + ".beta", 1, g_.cols(x), Init::Zeros);
    return g_.add(g_.mul(g_.layernorm_rows(x), gamma), beta);
}

int Builder::pair_src(int nq, int nk) {
    auto key = std::make_pair(nq, nk);
    auto it = pair_cache_.find(key);
    if (it == pair_cache_.end()) {
        Tensor src = Tensor::zeros(nq * nk, nq);
        Tensor dst = Tensor::zeros(nq * nk, nk);
        for (int i = 0; i < nq; ++i)
            for (int j = 0; j < nk; ++j) {
                src.at(i * nk + j, i) = 1.0;
                dst.at(i * nk + j, j) = 1.0;
            }
        int a = g_.constant(std::move(src));
        int d = g_.constant(std::move(dst));
        it = pair_cache_.emplace(key, std::make_pair(a, d)).first;
    }
    return it->second.first;
}

int Builder::pair_dst(int nq, int nk) {
    pair_src(nq, nk);
    return pair_cache_.at(std::make_pair(nq, nk)).second;
}

int relational_attention(Builder& b, const std::string& name, int q_tokens, int kv_tokens,
                         int nq, int nk, std::optional<int> edge_types,
                         std::optional<int> attn_mask, const AttnSpec& spec) {
    Graph& g = b.graph();
    int dh = spec.width / spec.heads;

    int q = b.linear(name + ".q", q_tokens, spec.width);
    int k = b.linear(name + ".k", kv_tokens, spec.width);
    int v = b.linear(name + ".v", kv_tokens, spec.width);

    bool relational = spec.edge_bias || spec.value_gate;
    int e = -1;
    if (relational) {
        int pq = b.linear_nobias(name + ".eq", q_tokens, spec.edge_proj);
        int pk = b.linear_nobias(name + ".ek", kv_tokens, spec.edge_proj);
        std::vector<int> parts = {g.matmul(b.pair_src(nq, nk), pq),
                                  g.matmul(b.pair_dst(nq, nk), pk)};
        if (edge_types) parts.push_back(*edge_types);
        e = g.concat(parts, 1);
    }

    std::vector<int> head_outs;
    double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
    for (int h = 0; h < spec.heads; ++h) {
        int qh = g.cols_of(q, h * dh, (h + 1) * dh);
        int kh = g.cols_of(k, h * dh, (h + 1) * dh);
        int vh = g.cols_of(v, h * dh, (h + 1) * dh);
        int scores = g.scale(g.matmul(qh, kh, false, true), inv_sqrt);
        if (spec.edge_bias) {
            int wb = b.param(name + ".bias" + std::to_string(h) + ".w", g.cols(e), 1, Init::Zeros);
            scores = g.add(scores, g.reshape(g.matmul(e, wb), nq, nk));
        }
        if (attn_mask) scores = g.add(scores, *attn_mask);
        int alpha = g.softmax_rows(scores);
        int out;
        if (spec.value_gate) {
            int wg = b.param(name + ".gate" + std::to_string(h) + ".w", g.cols(e), dh, Init::Zeros);
            int gate = g.add_scalar(g.tanh(g.matmul(e, wg)), 1.0);
            int msg = g.mul(g.matmul(b.pair_dst(nq, nk), vh), gate);
            int weighted = g.mul(msg, g.reshape(alpha, nq * nk, 1));
            out = g.matmul(b.pair_src(nq, nk), weighted, true, false);
        } else {
            out = g.matmul(alpha, vh);
        }
        head_outs.push_back(out);
    }
    int merged = head_outs.size() == 1 ? head_outs[0] : g.concat(head_outs, 1);
    return b.linear(name + ".o", merged, spec.width);
}

int transformer_ffn(Builder& b, const std::string& name, int x, int width) {
    Graph& g = b.graph();
    int h = b.mlp2(name + ".ffn", b.layernorm_affine(name + ".ln", x), 2 * width, width);
    return g.add(x, h);
}

int attention_stage(Builder& b, const std::string& name, int q_tokens, int kv_tokens,
                    int nq, int nk, std::optional<int> edge_types, std::optional<int> attn_mask,
                    const AttnSpec& spec) {
    Graph& g = b.graph();
    int qn = b.layernorm_affine(name + ".lnq", q_tokens);
    int kn = q_tokens == kv_tokens ? qn : b.layernorm_affine(name + ".lnk", kv_tokens);
    int att = relational_attention(b, name, qn, kn, nq, nk, edge_types, attn_mask, spec);
    int res = g.add(q_tokens, att);
    return transformer_ffn(b, name, res, spec.width);
}

int time_feature_dim(int freqs) { return 2 * freqs; }

Tensor time_features(double t, int freqs) {
    Tensor out = Tensor::zeros(1, 2 * freqs);
    for (int k = 0; k < freqs; ++k) {
        double w = M_PI * std::pow(2.0, k);
        out[2 * k] = std::sin(w * t);
        out[2 * k + 1] = std::cos(w * t);
    }
    return out;
}

Tensor time_feature_tangent(double t, int freqs) {
    Tensor out = Tensor::zeros(1, 2 * freqs);
    for (int k = 0; k < freqs; ++k) {
        double w = M_PI * std::pow(2.0, k);
        out[2 * k] = w * std::cos(w * t);
        out[2 * k + 1] = -w * std::sin(w * t);
    }
    return out;
}

}  // namespace vw::nn
