#include "vectorworld/diffcore/graph.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

#include "vectorworld/diffcore/kernels.hpp"

namespace vw::diff {

namespace {
constexpr double kLayerNormEps = 1e-5;

[[noreturn]] void fail(int id, Op op, const std::string& msg) {
    throw std::runtime_error("node #" + std::to_string(id) + " (" + op_name(op) + "): " + msg);
}

inline double stable_sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    double e = std::exp(x);
    return e / (1.0 + e);
}

// broadcast descriptor for Add/Mul: each dim equal or 1
struct Bcast {
    int orow, ocol;
    int ar, ac, br, bc;
};

Bcast bcast_shape(int id, Op op, int ar, int ac, int br, int bc) {
    auto join = [&](int x, int y) {
        if (x == y) return x;
        if (x == 1) return y;
        if (y == 1) return x;
        fail(id, op, "incompatible shapes (" + std::to_string(ar) + "," + std::to_string(ac) +
                         ") vs (" + std::to_string(br) + "," + std::to_string(bc) + ")");
    };
    return Bcast{join(ar, br), join(ac, bc), ar, ac, br, bc};
}

// reduce an (orow x ocol) adjoint back onto an (ar x ac) operand
Tensor reduce_to(const Tensor& g, int ar, int ac) {
    int orow = g.rows(), ocol = g.cols();
    if (ar == orow && ac == ocol) return g;
    Tensor out = Tensor::zeros(ar, ac);
    for (int i = 0; i < orow; ++i) {
        int ti = ar == 1 ? 0 : i;
        for (int j = 0; j < ocol; ++j) {
            int tj = ac == 1 ? 0 : j;
            out.at(ti, tj) += g.at(i, j);
        }
    }
    return out;
}
}  // namespace

const char* op_name(Op op) {
    switch (op) {
        case Op::Input: return "input";
        case Op::Param: return "param";
        case Op::Const: return "const";
        case Op::Add: return "add";
        case Op::Mul: return "mul";
        case Op::MatMul: return "matmul";
        case Op::Sigmoid: return "sigmoid";
        case Op::Tanh: return "tanh";
        case Op::Softmax: return "softmax";
        case Op::LayerNorm: return "layer-normalize";
        case Op::Concat: return "concat";
        case Op::Slice: return "slice";
        case Op::Sum: return "sum";
        case Op::Mean: return "mean";
        case Op::Square: return "square";
        case Op::Exp: return "exp";
        case Op::Log: return "log";
        case Op::Reshape: return "reshape";
        case Op::StopGrad: return "stop-gradient";
    }
    return "?";
}

void ParamStore::add(const std::string& name, Tensor t) {
    if (has(name)) throw std::runtime_error("ParamStore: duplicate '" + name + "'");
    order_.push_back(name);
    t_.emplace(name, std::move(t));
}

bool ParamStore::has(const std::string& name) const { return t_.count(name) != 0; }

Tensor& ParamStore::get(const std::string& name) {
    auto it = t_.find(name);
    if (it == t_.end()) throw std::runtime_error("ParamStore: missing '" + name + "'");
    return it->second;
}

const Tensor& ParamStore::get(const std::string& name) const {
    auto it = t_.find(name);
    if (it == t_.end()) throw std::runtime_error("ParamStore: missing '" + name + "'");
    return it->second;
}

size_t ParamStore::total_values() const {
    size_t n = 0;
    for (const auto& name : order_) n += t_.at(name).size();
    return n;
}

int Graph::push(Node n) {
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
}

void Graph::check_id(int id) const {
    if (id < 0 || id >= static_cast<int>(nodes_.size()))
        throw std::runtime_error("Graph: bad node id " + std::to_string(id));
}

int Graph::input(const std::string& name, int rows, int cols) {
    auto it = input_ids_.find(name);
    if (it != input_ids_.end()) {
        const Node& n = nodes_[it->second];
        if (n.rows != rows || n.cols != cols)
            throw std::runtime_error("Graph: input '" + name + "' re-declared with new shape");
        return it->second;
    }
    Node n;
    n.op = Op::Input;
    n.rows = rows;
    n.cols = cols;
    n.name = name;
    int id = push(std::move(n));
    input_ids_[name] = id;
    return id;
}

int Graph::param(const std::string& name) {
    auto it = param_ids_.find(name);
    if (it != param_ids_.end()) return it->second;
    const Tensor& t = store_->get(name);
    Node n;
    n.op = Op::Param;
    n.rows = t.rows();
    n.cols = t.cols();
    n.name = name;
    int id = push(std::move(n));
    param_ids_[name] = id;
    return id;
}

int Graph::constant(Tensor t) {
    Node n;
    n.op = Op::Const;
    n.rows = t.rows();
    n.cols = t.cols();
    n.cval = std::move(t);
    return push(std::move(n));
}

int Graph::add(int a, int b) {
    check_id(a);
    check_id(b);
    Bcast bc = bcast_shape(static_cast<int>(nodes_.size()), Op::Add,
                           rows(a), cols(a), rows(b), cols(b));
    Node n;
    n.op = Op::Add;
    n.in = {a, b};
    n.rows = bc.orow;
    n.cols = bc.ocol;
    return push(std::move(n));
}

int Graph::mul(int a, int b) {
    check_id(a);
    check_id(b);
    Bcast bc = bcast_shape(static_cast<int>(nodes_.size()), Op::Mul,
                           rows(a), cols(a), rows(b), cols(b));
    Node n;
    n.op = Op::Mul;
    n.in = {a, b};
    n.rows = bc.orow;
    n.cols = bc.ocol;
    return push(std::move(n));
}

int Graph::matmul(int a, int b, bool ta, bool tb) {
    check_id(a);
    check_id(b);
    int am = ta ? cols(a) : rows(a);
    int ak = ta ? rows(a) : cols(a);
    int bk = tb ? cols(b) : rows(b);
    int bn = tb ? rows(b) : cols(b);
    if (ak != bk)
        fail(static_cast<int>(nodes_.size()), Op::MatMul,
             "inner dims " + std::to_string(ak) + " vs " + std::to_string(bk));
    Node n;
    n.op = Op::MatMul;
    n.in = {a, b};
    n.ta = ta;
    n.tb = tb;
    n.rows = am;
    n.cols = bn;
    return push(std::move(n));
}

int Graph::sigmoid(int a) {
    check_id(a);
    Node n{Op::Sigmoid, {a}, rows(a), cols(a)};
    return push(std::move(n));
}

int Graph::tanh(int a) {
    check_id(a);
    Node n{Op::Tanh, {a}, rows(a), cols(a)};
    return push(std::move(n));
}

int Graph::square(int a) {
    check_id(a);
    Node n{Op::Square, {a}, rows(a), cols(a)};
    return push(std::move(n));
}

int Graph::exp(int a) {
    check_id(a);
    Node n{Op::Exp, {a}, rows(a), cols(a)};
    return push(std::move(n));
}

int Graph::log(int a) {
    check_id(a);
    Node n{Op::Log, {a}, rows(a), cols(a)};
    return push(std::move(n));
}

int Graph::softmax_rows(int a) {
    check_id(a);
    Node n{Op::Softmax, {a}, rows(a), cols(a)};
    n.axis = 1;
    return push(std::move(n));
}

int Graph::layernorm_rows(int a) {
    check_id(a);
    Node n{Op::LayerNorm, {a}, rows(a), cols(a)};
    n.axis = 1;
    return push(std::move(n));
}

int Graph::concat(int a, int b, int axis) { return concat(std::vector<int>{a, b}, axis); }

int Graph::concat(const std::vector<int>& xs, int axis) {
    if (xs.empty()) throw std::runtime_error("Graph::concat: empty");
    for (int x : xs) check_id(x);
    int id = static_cast<int>(nodes_.size());
    Node n;
    n.op = Op::Concat;
    n.in = xs;
    n.axis = axis;
    if (axis == 0) {
        n.cols = cols(xs[0]);
        n.rows = 0;
        for (int x : xs) {
            if (cols(x) != n.cols) fail(id, Op::Concat, "column mismatch");
            n.rows += rows(x);
        }
    } else if (axis == 1) {
        n.rows = rows(xs[0]);
        n.cols = 0;
        for (int x : xs) {
            if (rows(x) != n.rows) fail(id, Op::Concat, "row mismatch");
            n.cols += cols(x);
        }
    } else {
        fail(id, Op::Concat, "axis must be 0 or 1");
    }
    return push(std::move(n));
}

int Graph::slice(int a, int r0, int r1, int c0, int c1) {
    check_id(a);
    int id = static_cast<int>(nodes_.size());
    if (r0 < 0 || c0 < 0 || r1 > rows(a) || c1 > cols(a) || r0 >= r1 || c0 >= c1)
        fail(id, Op::Slice, "window out of range");
    Node n;
    n.op = Op::Slice;
    n.in = {a};
    n.r0 = r0;
    n.r1 = r1;
    n.c0 = c0;
    n.c1 = c1;
    n.rows = r1 - r0;
    n.cols = c1 - c0;
    return push(std::move(n));
}

int Graph::rows_of(int a, int r0, int r1) { return slice(a, r0, r1, 0, cols(a)); }
int Graph::cols_of(int a, int c0, int c1) { return slice(a, 0, rows(a), c0, c1); }

int Graph::sum_all(int a) {
    check_id(a);
    Node n{Op::Sum, {a}, 1, 1};
    n.axis = -1;
    return push(std::move(n));
}

int Graph::mean_all(int a) {
    check_id(a);
    Node n{Op::Mean, {a}, 1, 1};
    n.axis = -1;
    return push(std::move(n));
}

int Graph::sum_axis(int a, int axis) {
    check_id(a);
    Node n{Op::Sum, {a}, axis == 0 ? 1 : rows(a), axis == 0 ? cols(a) : 1};
    n.axis = axis;
    return push(std::move(n));
}

int Graph::mean_axis(int a, int axis) {
    check_id(a);
    Node n{Op::Mean, {a}, axis == 0 ? 1 : rows(a), axis == 0 ? cols(a) : 1};
    n.axis = axis;
    return push(std::move(n));
}

int Graph::reshape(int a, int r, int c) {
    check_id(a);
    int id = static_cast<int>(nodes_.size());
    if (static_cast<long>(r) * c != static_cast<long>(rows(a)) * cols(a))
        fail(id, Op::Reshape, "element count changes");
    Node n{Op::Reshape, {a}, r, c};
    return push(std::move(n));
}

int Graph::stop_gradient(int a) {
    check_id(a);
    Node n{Op::StopGrad, {a}, rows(a), cols(a)};
    return push(std::move(n));
}

int Graph::softplus(int a) { return log(add_scalar(exp(a), 1.0)); }

int Graph::smooth_abs(int a, double eps) {
    int s = add_scalar(square(a), eps * eps);
    int r = exp(scale(log(s), 0.5));
    return add_scalar(r, -eps);
}

void Graph::mark_output(const std::string& name, int id) {
    check_id(id);
    output_ids_[name] = id;
}

int Graph::output_id(const std::string& name) const {
    auto it = output_ids_.find(name);
    if (it == output_ids_.end()) throw std::runtime_error("Graph: no output '" + name + "'");
    return it->second;
}

// ---------------------------------------------------------------------------
// forward evaluation

namespace {

void forward_node(const Graph& g, int id, const Bindings& inputs, std::vector<Tensor>& val) {
    const Node& n = g.nodes()[id];
    switch (n.op) {
        case Op::Input: {
            auto it = inputs.find(n.name);
            if (it == inputs.end()) fail(id, n.op, "unbound input '" + n.name + "'");
            if (it->second.rows() != n.rows || it->second.cols() != n.cols)
                fail(id, n.op, "input '" + n.name + "' shape " + it->second.shape_str() +
                                   " declared (" + std::to_string(n.rows) + "," +
                                   std::to_string(n.cols) + ")");
            val[id] = it->second;
            break;
        }
        case Op::Param:
            val[id] = g.store()->get(n.name);
            break;
        case Op::Const:
            val[id] = n.cval;
            break;
        case Op::Add: {
            const Tensor& a = val[n.in[0]];
            const Tensor& b = val[n.in[1]];
            Tensor out = Tensor::zeros(n.rows, n.cols);
            for (int i = 0; i < n.rows; ++i)
                for (int j = 0; j < n.cols; ++j)
                    out.at(i, j) = a.at(a.rows() == 1 ? 0 : i, a.cols() == 1 ? 0 : j) +
                                   b.at(b.rows() == 1 ? 0 : i, b.cols() == 1 ? 0 : j);
            val[id] = std::move(out);
            break;
        }
        case Op::Mul: {
            const Tensor& a = val[n.in[0]];
            const Tensor& b = val[n.in[1]];
            Tensor out = Tensor::zeros(n.rows, n.cols);
            for (int i = 0; i < n.rows; ++i)
                for (int j = 0; j < n.cols; ++j)
                    out.at(i, j) = a.at(a.rows() == 1 ? 0 : i, a.cols() == 1 ? 0 : j) *
                                   b.at(b.rows() == 1 ? 0 : i, b.cols() == 1 ? 0 : j);
            val[id] = std::move(out);
            break;
        }
        case Op::MatMul: {
            const Tensor& a = val[n.in[0]];
            const Tensor& b = val[n.in[1]];
            int k = n.ta ? a.rows() : a.cols();
            Tensor out = Tensor::zeros(n.rows, n.cols);
            kernels::matmul(a.values().data(), b.values().data(), out.values().data(),
                            n.rows, k, n.cols, n.ta, n.tb);
            val[id] = std::move(out);
            break;
        }
        case Op::Sigmoid: {
            const Tensor& a = val[n.in[0]];
            Tensor out = Tensor::zeros(n.rows, n.cols);
            for (size_t i = 0; i < a.size(); ++i) out[i] = stable_sigmoid(a[i]);
            val[id] = std::move(out);
            break;
        }
        case Op::Tanh: {
            const Tensor& a = val[n.in[0]];
            Tensor out = Tensor::zeros(n.rows, n.cols);
            for (size_t i = 0; i < a.size(); ++i) out[i] = std::tanh(a[i]);
            val[id] = std::move(out);
            break;
        }
        case Op::Softmax: {
            const Tensor& a = val[n.in[0]];
            Tensor out = Tensor::zeros(n.rows, n.cols);
            if (n.axis == 1) {
                kernels::softmax_rows(a.values().data(), out.values().data(), n.rows, n.cols);
            } else {
                for (int j = 0; j < n.cols; ++j) {
                    double m = a.at(0, j);
                    for (int i = 1; i < n.rows; ++i) m = std::max(m, a.at(i, j));
                    double z = 0.0;
                    for (int i = 0; i < n.rows; ++i) {
                        out.at(i, j) = std::exp(a.at(i, j) - m);
                        z += out.at(i, j);
                    }
                    for (int i = 0; i < n.rows; ++i) out.at(i, j) /= z;
                }
            }
            val[id] = std::move(out);
            break;
        }
        case Op::LayerNorm: {
            const Tensor& a = val[n.in[0]];
            Tensor out = Tensor::zeros(n.rows, n.cols);
            kernels::layernorm_rows(a.values().data(), out.values().data(), n.rows, n.cols,
                                    kLayerNormEps);
            val[id] = std::move(out);
            break;
        }
        case Op::Concat: {
            Tensor out = Tensor::zeros(n.rows, n.cols);
            if (n.axis == 0) {
                int r = 0;
                for (int x : n.in) {
                    const Tensor& a = val[x];
                    std::memcpy(&out.at(r, 0), a.values().data(), a.size() * sizeof(double));
                    r += a.rows();
                }
            } else {
                int c = 0;
                for (int x : n.in) {
                    const Tensor& a = val[x];
                    for (int i = 0; i < a.rows(); ++i)
                        for (int j = 0; j < a.cols(); ++j) out.at(i, c + j) = a.at(i, j);
                    c += a.cols();
                }
            }
            val[id] = std::move(out);
            break;
        }
        case Op::Slice: {
            const Tensor& a = val[n.in[0]];
            Tensor out = Tensor::zeros(n.rows, n.cols);
            for (int i = 0; i < n.rows; ++i)
                for (int j = 0; j < n.cols; ++j) out.at(i, j) = a.at(n.r0 + i, n.c0 + j);
            val[id] = std::move(out);
            break;
        }
        case Op::Sum:
        case Op::Mean: {
            const Tensor& a = val[n.in[0]];
            Tensor out = Tensor::zeros(n.rows, n.cols);
            if (n.axis == -1) {
                double s = 0.0;
                for (size_t i = 0; i < a.size(); ++i) s += a[i];
                out[0] = n.op == Op::Mean ? s / static_cast<double>(a.size()) : s;
            } else if (n.axis == 0) {
                for (int j = 0; j < a.cols(); ++j) {
                    double s = 0.0;
                    for (int i = 0; i < a.rows(); ++i) s += a.at(i, j);
                    out.at(0, j) = n.op == Op::Mean ? s / a.rows() : s;
                }
            } else {
                for (int i = 0; i < a.rows(); ++i) {
                    double s = 0.0;
                    for (int j = 0; j < a.cols(); ++j) s += a.at(i, j);
                    out.at(i, 0) = n.op == Op::Mean ? s / a.cols() : s;
                }
            }
            val[id] = std::move(out);
            break;
        }
        case Op::Square: {
            const Tensor& a = val[n.in[0]];
            Tensor out = Tensor::zeros(n.rows, n.cols);
            for (size_t i = 0; i < a.size(); ++i) out[i] = a[i] * a[i];
            val[id] = std::move(out);
            break;
        }
        case Op::Exp: {
            const Tensor& a = val[n.in[0]];
            Tensor out = Tensor::zeros(n.rows, n.cols);
            for (size_t i = 0; i < a.size(); ++i) out[i] = std::exp(a[i]);
            out.check_finite("node #" + std::to_string(id) + " (exp)");
            val[id] = std::move(out);
            break;
        }
        case Op::Log: {
            const Tensor& a = val[n.in[0]];
            Tensor out = Tensor::zeros(n.rows, n.cols);
            for (size_t i = 0; i < a.size(); ++i) {
                if (a[i] <= 0.0) fail(id, n.op, "non-positive argument");
                out[i] = std::log(a[i]);
            }
            val[id] = std::move(out);
            break;
        }
        case Op::Reshape: {
            Tensor out(n.rows, n.cols, val[n.in[0]].values());
            val[id] = std::move(out);
            break;
        }
        case Op::StopGrad:
            val[id] = val[n.in[0]];
            break;
    }
}

}  // namespace

EvalResult evaluate(const Graph& g, const Bindings& inputs) {
    EvalResult r;
    r.values.resize(g.nodes().size());
    for (int id = 0; id < static_cast<int>(g.nodes().size()); ++id)
        forward_node(g, id, inputs, r.values);
    for (const auto& [name, id] : g.outputs()) r.outputs.emplace(name, r.values[id]);
    return r;
}

// ---------------------------------------------------------------------------
// reverse mode

GradResult grad(const Graph& g, const Bindings& inputs, const std::string& output) {
    int out_id = g.output_id(output);
    const auto& nodes = g.nodes();
    if (nodes[out_id].rows != 1 || nodes[out_id].cols != 1)
        throw std::runtime_error("grad: output '" + output + "' is not scalar");

    EvalResult fwd = evaluate(g, inputs);
    std::vector<Tensor> adj(nodes.size());
    for (size_t i = 0; i < nodes.size(); ++i) adj[i] = Tensor::zeros(nodes[i].rows, nodes[i].cols);
    adj[out_id][0] = 1.0;

    for (int id = static_cast<int>(nodes.size()) - 1; id >= 0; --id) {
        const Node& n = nodes[id];
        const Tensor& gt = adj[id];
        switch (n.op) {
            case Op::Input:
            case Op::Param:
            case Op::Const:
                break;
            case Op::Add: {
                for (int s = 0; s < 2; ++s) {
                    const Tensor& a = fwd.values[n.in[s]];
                    Tensor r = reduce_to(gt, a.rows(), a.cols());
                    for (size_t i = 0; i < r.size(); ++i) adj[n.in[s]][i] += r[i];
                }
                break;
            }
            case Op::Mul: {
                const Tensor& a = fwd.values[n.in[0]];
                const Tensor& b = fwd.values[n.in[1]];
                Tensor ga = Tensor::zeros(n.rows, n.cols);
                Tensor gb = Tensor::zeros(n.rows, n.cols);
                for (int i = 0; i < n.rows; ++i)
                    for (int j = 0; j < n.cols; ++j) {
                        double av = a.at(a.rows() == 1 ? 0 : i, a.cols() == 1 ? 0 : j);
                        double bv = b.at(b.rows() == 1 ? 0 : i, b.cols() == 1 ? 0 : j);
                        ga.at(i, j) = gt.at(i, j) * bv;
                        gb.at(i, j) = gt.at(i, j) * av;
                    }
                Tensor ra = reduce_to(ga, a.rows(), a.cols());
                Tensor rb = reduce_to(gb, b.rows(), b.cols());
                for (size_t i = 0; i < ra.size(); ++i) adj[n.in[0]][i] += ra[i];
                for (size_t i = 0; i < rb.size(); ++i) adj[n.in[1]][i] += rb[i];
                break;
            }
            case Op::MatMul: {
                const Tensor& a = fwd.values[n.in[0]];
                const Tensor& b = fwd.values[n.in[1]];
                int m = n.rows, nn = n.cols;
                int k = n.ta ? a.rows() : a.cols();
                Tensor da = Tensor::zeros(a.rows(), a.cols());
                Tensor db = Tensor::zeros(b.rows(), b.cols());
                // dA and dB for the four transpose cases
                if (!n.ta && !n.tb) {
                    kernels::matmul(gt.values().data(), b.values().data(), da.values().data(),
                                    m, nn, k, false, true);
                    kernels::matmul(a.values().data(), gt.values().data(), db.values().data(),
                                    k, m, nn, true, false);
                } else if (n.ta && !n.tb) {
                    kernels::matmul(b.values().data(), gt.values().data(), da.values().data(),
                                    k, nn, m, false, true);
                    kernels::matmul(a.values().data(), gt.values().data(), db.values().data(),
                                    k, m, nn, false, false);
                } else if (!n.ta && n.tb) {
                    kernels::matmul(gt.values().data(), b.values().data(), da.values().data(),
                                    m, nn, k, false, false);
                    kernels::matmul(gt.values().data(), a.values().data(), db.values().data(),
                                    nn, m, k, true, false);
                } else {
                    kernels::matmul(b.values().data(), gt.values().data(), da.values().data(),
                                    k, nn, m, true, true);
                    kernels::matmul(gt.values().data(), a.values().data(), db.values().data(),
                                    nn, m, k, true, true);
                }
                for (size_t i = 0; i < da.size(); ++i) adj[n.in[0]][i] += da[i];
                for (size_t i = 0; i < db.size(); ++i) adj[n.in[1]][i] += db[i];
                break;
            }
            case Op::Sigmoid: {
                const Tensor& y = fwd.values[id];
                for (size_t i = 0; i < y.size(); ++i)
                    adj[n.in[0]][i] += gt[i] * y[i] * (1.0 - y[i]);
                break;
            }
            case Op::Tanh: {
                const Tensor& y = fwd.values[id];
                for (size_t i = 0; i < y.size(); ++i)
                    adj[n.in[0]][i] += gt[i] * (1.0 - y[i] * y[i]);
                break;
            }
            case Op::Softmax: {
                const Tensor& y = fwd.values[id];
                if (n.axis == 1) {
                    for (int i = 0; i < n.rows; ++i) {
                        double dot = 0.0;
                        for (int j = 0; j < n.cols; ++j) dot += gt.at(i, j) * y.at(i, j);
                        for (int j = 0; j < n.cols; ++j)
                            adj[n.in[0]].at(i, j) += y.at(i, j) * (gt.at(i, j) - dot);
                    }
                } else {
                    for (int j = 0; j < n.cols; ++j) {
                        double dot = 0.0;
                        for (int i = 0; i < n.rows; ++i) dot += gt.at(i, j) * y.at(i, j);
                        for (int i = 0; i < n.rows; ++i)
                            adj[n.in[0]].at(i, j) += y.at(i, j) * (gt.at(i, j) - dot);
                    }
                }
                break;
            }
            case Op::LayerNorm: {
                const Tensor& x = fwd.values[n.in[0]];
                const Tensor& y = fwd.values[id];
                for (int i = 0; i < n.rows; ++i) {
                    double mu = 0.0, var = 0.0;
                    for (int j = 0; j < n.cols; ++j) mu += x.at(i, j);
                    mu /= n.cols;
                    for (int j = 0; j < n.cols; ++j) {
                        double d = x.at(i, j) - mu;
                        var += d * d;
                    }
                    var /= n.cols;
                    double inv = 1.0 / std::sqrt(var + kLayerNormEps);
                    double gm = 0.0, gym = 0.0;
                    for (int j = 0; j < n.cols; ++j) {
                        gm += gt.at(i, j);
                        gym += gt.at(i, j) * y.at(i, j);
                    }
                    gm /= n.cols;
                    gym /= n.cols;
                    for (int j = 0; j < n.cols; ++j)
                        adj[n.in[0]].at(i, j) += inv * (gt.at(i, j) - gm - y.at(i, j) * gym);
                }
                break;
            }
            case Op::Concat: {
                if (n.axis == 0) {
                    int r = 0;
                    for (int x : n.in) {
                        Tensor& dst = adj[x];
                        for (int i = 0; i < dst.rows(); ++i)
                            for (int j = 0; j < dst.cols(); ++j) dst.at(i, j) += gt.at(r + i, j);
                        r += dst.rows();
                    }
                } else {
                    int c = 0;
                    for (int x : n.in) {
                        Tensor& dst = adj[x];
                        for (int i = 0; i < dst.rows(); ++i)
                            for (int j = 0; j < dst.cols(); ++j) dst.at(i, j) += gt.at(i, c + j);
                        c += dst.cols();
                    }
                }
                break;
            }
            case Op::Slice: {
                Tensor& dst = adj[n.in[0]];
                for (int i = 0; i < n.rows; ++i)
                    for (int j = 0; j < n.cols; ++j) dst.at(n.r0 + i, n.c0 + j) += gt.at(i, j);
                break;
            }
            case Op::Sum:
            case Op::Mean: {
                Tensor& dst = adj[n.in[0]];
                double denom = 1.0;
                if (n.op == Op::Mean) {
                    if (n.axis == -1) denom = static_cast<double>(dst.size());
                    else if (n.axis == 0) denom = dst.rows();
                    else denom = dst.cols();
                }
                for (int i = 0; i < dst.rows(); ++i)
                    for (int j = 0; j < dst.cols(); ++j) {
                        double gv;
                        if (n.axis == -1) gv = gt[0];
                        else if (n.axis == 0) gv = gt.at(0, j);
                        else gv = gt.at(i, 0);
                        dst.at(i, j) += gv / denom;
                    }
                break;
            }
            case Op::Square: {
                const Tensor& x = fwd.values[n.in[0]];
                for (size_t i = 0; i < x.size(); ++i) adj[n.in[0]][i] += gt[i] * 2.0 * x[i];
                break;
            }
            case Op::Exp: {
                const Tensor& y = fwd.values[id];
                for (size_t i = 0; i < y.size(); ++i) adj[n.in[0]][i] += gt[i] * y[i];
                break;
            }
            case Op::Log: {
                const Tensor& x = fwd.values[n.in[0]];
                for (size_t i = 0; i < x.size(); ++i) adj[n.in[0]][i] += gt[i] / x[i];
                break;
            }
            case Op::Reshape: {
                Tensor& dst = adj[n.in[0]];
                for (size_t i = 0; i < dst.size(); ++i) dst[i] += gt[i];
                break;
            }
            case Op::StopGrad:
                break;
        }
    }

    GradResult r;
    r.value = fwd.values[out_id][0];
    for (const auto& [name, id] : g.params()) r.wrt_params.emplace(name, adj[id]);
    for (const auto& [name, id] : g.inputs()) r.wrt_inputs.emplace(name, adj[id]);
    for (const auto& [name, id] : g.outputs()) r.outputs.emplace(name, fwd.values[id]);
    return r;
}

// ---------------------------------------------------------------------------
// forward mode

JvpResult jvp(const Graph& g, const Bindings& inputs, const Bindings& tangents) {
    const auto& nodes = g.nodes();
    for (const auto& [name, id] : g.inputs()) {
        if (!tangents.count(name))
            throw std::runtime_error("jvp: missing tangent for input '" + name + "'");
        (void)id;
    }

    EvalResult fwd;
    fwd.values.resize(nodes.size());
    std::vector<Tensor> dot(nodes.size());  // tangent per node

    for (int id = 0; id < static_cast<int>(nodes.size()); ++id) {
        forward_node(g, id, inputs, fwd.values);
        const Node& n = nodes[id];
        Tensor& dt = dot[id];
        switch (n.op) {
            case Op::Input: {
                const Tensor& t = tangents.at(n.name);
                if (t.rows() != n.rows || t.cols() != n.cols)
                    fail(id, n.op, "tangent shape mismatch for '" + n.name + "'");
                dt = t;
                break;
            }
            case Op::Param:
            case Op::Const:
            case Op::StopGrad:
                dt = Tensor::zeros(n.rows, n.cols);
                break;
            case Op::Add: {
                const Tensor& da = dot[n.in[0]];
                const Tensor& db = dot[n.in[1]];
                dt = Tensor::zeros(n.rows, n.cols);
                for (int i = 0; i < n.rows; ++i)
                    for (int j = 0; j < n.cols; ++j)
                        dt.at(i, j) = da.at(da.rows() == 1 ? 0 : i, da.cols() == 1 ? 0 : j) +
                                      db.at(db.rows() == 1 ? 0 : i, db.cols() == 1 ? 0 : j);
                break;
            }
            case Op::Mul: {
                const Tensor& a = fwd.values[n.in[0]];
                const Tensor& b = fwd.values[n.in[1]];
                const Tensor& da = dot[n.in[0]];
                const Tensor& db = dot[n.in[1]];
                dt = Tensor::zeros(n.rows, n.cols);
                for (int i = 0; i < n.rows; ++i)
                    for (int j = 0; j < n.cols; ++j) {
                        int ai = a.rows() == 1 ? 0 : i, aj = a.cols() == 1 ? 0 : j;
                        int bi = b.rows() == 1 ? 0 : i, bj = b.cols() == 1 ? 0 : j;
                        dt.at(i, j) = da.at(ai, aj) * b.at(bi, bj) + a.at(ai, aj) * db.at(bi, bj);
                    }
                break;
            }
            case Op::MatMul: {
                const Tensor& a = fwd.values[n.in[0]];
                const Tensor& b = fwd.values[n.in[1]];
                const Tensor& da = dot[n.in[0]];
                const Tensor& db = dot[n.in[1]];
                int k = n.ta ? a.rows() : a.cols();
                dt = Tensor::zeros(n.rows, n.cols);
                Tensor tmp = Tensor::zeros(n.rows, n.cols);
                kernels::matmul(da.values().data(), b.values().data(), dt.values().data(),
                                n.rows, k, n.cols, n.ta, n.tb);
                kernels::matmul(a.values().data(), db.values().data(), tmp.values().data(),
                                n.rows, k, n.cols, n.ta, n.tb);
                for (size_t i = 0; i < dt.size(); ++i) dt[i] += tmp[i];
                break;
            }
            case Op::Sigmoid: {
                const Tensor& y = fwd.values[id];
                const Tensor& dx = dot[n.in[0]];
                dt = Tensor::zeros(n.rows, n.cols);
                for (size_t i = 0; i < y.size(); ++i) dt[i] = dx[i] * y[i] * (1.0 - y[i]);
                break;
            }
            case Op::Tanh: {
                const Tensor& y = fwd.values[id];
                const Tensor& dx = dot[n.in[0]];
                dt = Tensor::zeros(n.rows, n.cols);
                for (size_t i = 0; i < y.size(); ++i) dt[i] = dx[i] * (1.0 - y[i] * y[i]);
                break;
            }
            case Op::Softmax: {
                const Tensor& y = fwd.values[id];
                const Tensor& dx = dot[n.in[0]];
                dt = Tensor::zeros(n.rows, n.cols);
                if (n.axis == 1) {
                    for (int i = 0; i < n.rows; ++i) {
                        double dotp = 0.0;
                        for (int j = 0; j < n.cols; ++j) dotp += y.at(i, j) * dx.at(i, j);
                        for (int j = 0; j < n.cols; ++j)
                            dt.at(i, j) = y.at(i, j) * (dx.at(i, j) - dotp);
                    }
                } else {
                    for (int j = 0; j < n.cols; ++j) {
                        double dotp = 0.0;
                        for (int i = 0; i < n.rows; ++i) dotp += y.at(i, j) * dx.at(i, j);
                        for (int i = 0; i < n.rows; ++i)
                            dt.at(i, j) = y.at(i, j) * (dx.at(i, j) - dotp);
                    }
                }
                break;
            }
            case Op::LayerNorm: {
                const Tensor& x = fwd.values[n.in[0]];
                const Tensor& y = fwd.values[id];
                const Tensor& dx = dot[n.in[0]];
                dt = Tensor::zeros(n.rows, n.cols);
                for (int i = 0; i < n.rows; ++i) {
                    double mu = 0.0, var = 0.0;
                    for (int j = 0; j < n.cols; ++j) mu += x.at(i, j);
                    mu /= n.cols;
                    for (int j = 0; j < n.cols; ++j) {
                        double d = x.at(i, j) - mu;
                        var += d * d;
                    }
                    var /= n.cols;
                    double inv = 1.0 / std::sqrt(var + kLayerNormEps);
                    double dm = 0.0, dym = 0.0;
                    for (int j = 0; j < n.cols; ++j) {
                        dm += dx.at(i, j);
                        dym += dx.at(i, j) * y.at(i, j);
                    }
                    dm /= n.cols;
                    dym /= n.cols;
                    for (int j = 0; j < n.cols; ++j)
                        dt.at(i, j) = inv * (dx.at(i, j) - dm - y.at(i, j) * dym);
                }
                break;
            }
            case Op::Concat: {
                dt = Tensor::zeros(n.rows, n.cols);
                if (n.axis == 0) {
                    int r = 0;
                    for (int x : n.in) {
                        const Tensor& s = dot[x];
                        for (int i = 0; i < s.rows(); ++i)
                            for (int j = 0; j < s.cols(); ++j) dt.at(r + i, j) = s.at(i, j);
                        r += s.rows();
                    }
                } else {
                    int c = 0;
                    for (int x : n.in) {
                        const Tensor& s = dot[x];
                        for (int i = 0; i < s.rows(); ++i)
                            for (int j = 0; j < s.cols(); ++j) dt.at(i, c + j) = s.at(i, j);
                        c += s.cols();
                    }
                }
                break;
            }
            case Op::Slice: {
                const Tensor& s = dot[n.in[0]];
                dt = Tensor::zeros(n.rows, n.cols);
                for (int i = 0; i < n.rows; ++i)
                    for (int j = 0; j < n.cols; ++j) dt.at(i, j) = s.at(n.r0 + i, n.c0 + j);
                break;
            }
            case Op::Sum:
            case Op::Mean: {
                const Tensor& s = dot[n.in[0]];
                dt = Tensor::zeros(n.rows, n.cols);
                if (n.axis == -1) {
                    double acc = 0.0;
                    for (size_t i = 0; i < s.size(); ++i) acc += s[i];
                    dt[0] = n.op == Op::Mean ? acc / static_cast<double>(s.size()) : acc;
                } else if (n.axis == 0) {
                    for (int j = 0; j < s.cols(); ++j) {
                        double acc = 0.0;
                        for (int i = 0; i < s.rows(); ++i) acc += s.at(i, j);
                        dt.at(0, j) = n.op == Op::Mean ? acc / s.rows() : acc;
                    }
                } else {
                    for (int i = 0; i < s.rows(); ++i) {
                        double acc = 0.0;
                        for (int j = 0; j < s.cols(); ++j) acc += s.at(i, j);
                        dt.at(i, 0) = n.op == Op::Mean ? acc / s.cols() : acc;
                    }
                }
                break;
            }
            case Op::Square: {
                const Tensor& x = fwd.values[n.in[0]];
                const Tensor& dx = dot[n.in[0]];
                dt = Tensor::zeros(n.rows, n.cols);
                for (size_t i = 0; i < x.size(); ++i) dt[i] = 2.0 * x[i] * dx[i];
                break;
            }
            case Op::Exp: {
                const Tensor& y = fwd.values[id];
                const Tensor& dx = dot[n.in[0]];
                dt = Tensor::zeros(n.rows, n.cols);
                for (size_t i = 0; i < y.size(); ++i) dt[i] = y[i] * dx[i];
                break;
            }
            case Op::Log: {
                const Tensor& x = fwd.values[n.in[0]];
                const Tensor& dx = dot[n.in[0]];
                dt = Tensor::zeros(n.rows, n.cols);
                for (size_t i = 0; i < x.size(); ++i) dt[i] = dx[i] / x[i];
                break;
            }
            case Op::Reshape: {
                dt = Tensor(n.rows, n.cols, dot[n.in[0]].values());
                break;
            }
        }
    }

    JvpResult r;
    for (const auto& [name, id] : g.outputs()) {
        r.outputs.emplace(name, fwd.values[id]);
        r.tangents.emplace(name, dot[id]);
    }
    return r;
}

}  // namespace vw::diff
