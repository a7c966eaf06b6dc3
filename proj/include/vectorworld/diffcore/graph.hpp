#pragma once

#include <map>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "vectorworld/diffcore/tensor.hpp"

namespace vw::diff {

// Closed primitive set. Reshape is a zero-cost layout view (same data,
// new extents); StopGrad is identity forward, zero backward and zero
// tangent.
enum class Op {
    Input, Param, Const,
    Add, Mul, MatMul,
    Sigmoid, Tanh, Softmax, LayerNorm,
    Concat, Slice, Sum, Mean,
    Square, Exp, Log,
    Reshape, StopGrad,
};

const char* op_name(Op op);

struct Node {
    Op op;
    std::vector<int> in;
    int rows = 0, cols = 0;  // static output shape
    int axis = -1;           // Softmax/Concat/Sum/Mean; -1 = reduce all
    bool ta = false, tb = false;
    int r0 = 0, r1 = 0, c0 = 0, c1 = 0;  // slice window
    std::string name;  // Input/Param
    Tensor cval;       // Const payload
};

// Named parameter tensors in deterministic insertion order.
class ParamStore {
public:
    void add(const std::string& name, Tensor t);
    bool has(const std::string& name) const;
    Tensor& get(const std::string& name);
    const Tensor& get(const std::string& name) const;
    const std::vector<std::string>& names() const { return order_; }
    size_t total_values() const;

private:
    std::vector<std::string> order_;
    std::unordered_map<std::string, Tensor> t_;
};

using Bindings = std::unordered_map<std::string, Tensor>;

// Static computation graph. Construction order is the (fixed)
// topological order; shapes validate at build time. Evaluation is pure
// and safe for concurrent use with distinct workspaces.
class Graph {
public:
    explicit Graph(std::shared_ptr<ParamStore> store) : store_(std::move(store)) {}

    int input(const std::string& name, int rows, int cols);
    int param(const std::string& name);
    int constant(Tensor t);
    int constant(double v) { return constant(Tensor::scalar(v)); }

    int add(int a, int b);
    int sub(int a, int b) { return add(a, scale(b, -1.0)); }
    int mul(int a, int b);
    int scale(int a, double s) { return mul(a, constant(s)); }
    int add_scalar(int a, double s) { return add(a, constant(s)); }
    int matmul(int a, int b, bool ta = false, bool tb = false);
    int sigmoid(int a);
    int tanh(int a);
    int square(int a);
    int exp(int a);
    int log(int a);
    int softmax_rows(int a);
    int layernorm_rows(int a);
    int concat(int a, int b, int axis);
    int concat(const std::vector<int>& xs, int axis);
    int slice(int a, int r0, int r1, int c0, int c1);
    int rows_of(int a, int r0, int r1);
    int cols_of(int a, int c0, int c1);
    int sum_all(int a);
    int mean_all(int a);
    int sum_axis(int a, int axis);
    int mean_axis(int a, int axis);
    int reshape(int a, int rows, int cols);
    int stop_gradient(int a);

    // composites over the primitive set
    int softplus(int a);                  // log(1 + exp(a)), stabilized form below
    int smooth_abs(int a, double eps);    // sqrt(a^2 + eps^2) - eps

    void mark_output(const std::string& name, int id);

    const std::vector<Node>& nodes() const { return nodes_; }
    const std::map<std::string, int>& inputs() const { return input_ids_; }
    const std::map<std::string, int>& outputs() const { return output_ids_; }
    const std::map<std::string, int>& params() const { return param_ids_; }
    int output_id(const std::string& name) const;
    const std::shared_ptr<ParamStore>& store() const { return store_; }

    int rows(int id) const { return nodes_[id].rows; }
    int cols(int id) const { return nodes_[id].cols; }

private:
    int push(Node n);
    void check_id(int id) const;

    std::vector<Node> nodes_;
    std::map<std::string, int> input_ids_;
    std::map<std::string, int> param_ids_;
    std::map<std::string, int> output_ids_;
    std::shared_ptr<ParamStore> store_;
};

struct EvalResult {
    std::vector<Tensor> values;  // per node id
    Bindings outputs;
};

struct GradResult {
    double value = 0.0;
    Bindings wrt_params;
    Bindings wrt_inputs;
    Bindings outputs;  // all marked outputs from the forward pass
};

struct JvpResult {
    Bindings outputs;
    Bindings tangents;
};

// Deterministic forward pass; repeated calls are bit-identical.
EvalResult evaluate(const Graph& g, const Bindings& inputs);

// Reverse mode from one scalar output, w.r.t. parameters and inputs.
GradResult grad(const Graph& g, const Bindings& inputs, const std::string& output);

// True forward mode (dual numbers per primitive). Every declared input
// must carry a tangent; parameters are treated as constants.
JvpResult jvp(const Graph& g, const Bindings& inputs, const Bindings& tangents);

}  // namespace vw::diff
