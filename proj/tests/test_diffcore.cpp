#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>

#include "fd_oracle.hpp"
#include "vectorworld/diffcore/checkpoint.hpp"
#include "vectorworld/diffcore/graph.hpp"
#include "vectorworld/diffcore/kernels.hpp"
#include "vectorworld/diffcore/optim.hpp"
#include "vectorworld/util/rng.hpp"

using namespace vw::diff;
using vw::Rng;
using vw::testing::fd_directional;
using vw::testing::fd_grad_inputs;
using vw::testing::fd_grad_params;
using vw::testing::rel_err;

namespace {
std::shared_ptr<ParamStore> empty_store() { return std::make_shared<ParamStore>(); }

Tensor random_tensor(Rng& rng, int r, int c, double scale = 1.0) {
    Tensor t = Tensor::zeros(r, c);
    for (size_t i = 0; i < t.size(); ++i) t[i] = scale * rng.normal();
    return t;
}
}  // namespace

TEST_CASE("evaluate: x squared at 3 gives 9") {
    Graph g(empty_store());
    int x = g.input("x", 1, 1);
    g.mark_output("y", g.square(x));
    Bindings in{{"x", Tensor::scalar(3.0)}};
    CHECK(vw::testing::eval_scalar(g, in, "y") == doctest::Approx(9.0));
}

TEST_CASE("evaluate: softmax of (0,0) is (0.5, 0.5)") {
    Graph g(empty_store());
    int x = g.input("x", 1, 2);
    g.mark_output("y", g.softmax_rows(x));
    Bindings in{{"x", Tensor(1, 2, {0.0, 0.0})}};
    auto r = evaluate(g, in);
    CHECK(r.outputs.at("y")[0] == doctest::Approx(0.5));
    CHECK(r.outputs.at("y")[1] == doctest::Approx(0.5));
}

TEST_CASE("evaluate: layer-normalize of a constant vector is zero") {
    Graph g(empty_store());
    int x = g.input("x", 1, 4);
    g.mark_output("y", g.layernorm_rows(x));
    Bindings in{{"x", Tensor(1, 4, {2.5, 2.5, 2.5, 2.5})}};
    auto r = evaluate(g, in);
    for (size_t i = 0; i < 4; ++i) CHECK(r.outputs.at("y")[i] == 0.0);
}

TEST_CASE("evaluate: repeated calls are bit-identical") {
    auto store = empty_store();
    Rng rng(7);
    store->add("w", random_tensor(rng, 4, 4));
    Graph g(store);
    int x = g.input("x", 3, 4);
    int h = g.tanh(g.matmul(x, g.param("w")));
    g.mark_output("y", g.layernorm_rows(h));
    Bindings in{{"x", random_tensor(rng, 3, 4)}};
    auto a = evaluate(g, in);
    auto b = evaluate(g, in);
    for (size_t i = 0; i < a.outputs.at("y").size(); ++i)
        CHECK(a.outputs.at("y")[i] == b.outputs.at("y")[i]);
}

TEST_CASE("evaluate: shape mismatch names the offending node") {
    Graph g(empty_store());
    int x = g.input("x", 2, 3);
    CHECK_THROWS_WITH_AS(g.matmul(x, x), doctest::Contains("matmul"), std::runtime_error);
}

TEST_CASE("grad: d(x^2)/dx at 3 is 6") {
    Graph g(empty_store());
    int x = g.input("x", 1, 1);
    g.mark_output("y", g.square(x));
    auto r = grad(g, {{"x", Tensor::scalar(3.0)}}, "y");
    CHECK(r.wrt_inputs.at("x").item() == doctest::Approx(6.0));
}

TEST_CASE("grad: d sigmoid(0)/dx is 0.25") {
    Graph g(empty_store());
    int x = g.input("x", 1, 1);
    g.mark_output("y", g.sigmoid(x));
    auto r = grad(g, {{"x", Tensor::scalar(0.0)}}, "y");
    CHECK(r.wrt_inputs.at("x").item() == doctest::Approx(0.25));
}

TEST_CASE("grad: non-scalar output rejected") {
    Graph g(empty_store());
    int x = g.input("x", 2, 2);
    g.mark_output("y", g.tanh(x));
    CHECK_THROWS_AS(grad(g, {{"x", Tensor::zeros(2, 2)}}, "y"), std::runtime_error);
}

TEST_CASE("grad: softmax cross-entropy matches central differences") {
    // CE = -log softmax(l)[target] on a random 5-logit input
    Graph g(empty_store());
    int l = g.input("l", 1, 5);
    int p = g.softmax_rows(l);
    int onehot = g.constant(Tensor(1, 5, {0, 0, 1, 0, 0}));
    int ce = g.scale(g.sum_all(g.mul(g.log(p), onehot)), -1.0);
    g.mark_output("loss", ce);

    Rng rng(11);
    Bindings in{{"l", random_tensor(rng, 1, 5)}};
    auto r = grad(g, in, "loss");
    auto fd = fd_grad_inputs(g, in, "loss", 1e-5);
    CHECK(rel_err(r.wrt_inputs.at("l"), fd.at("l")) <= 1e-5);
}

TEST_CASE("jvp: linear map applies the matrix to the tangent exactly") {
    Graph g(empty_store());
    int a = g.constant(Tensor(2, 2, {1, 2, 3, 4}));
    int x = g.input("x", 2, 1);
    g.mark_output("y", g.matmul(a, x));
    Bindings in{{"x", Tensor(2, 1, {0.7, -1.3})}};
    Bindings tan{{"x", Tensor(2, 1, {1.0, 0.0})}};
    auto r = jvp(g, in, tan);
    CHECK(r.tangents.at("y")[0] == 1.0);
    CHECK(r.tangents.at("y")[1] == 3.0);
}

TEST_CASE("jvp: chain rule for x^2 at x=3 with tangent 2 gives 12") {
    Graph g(empty_store());
    int x = g.input("x", 1, 1);
    g.mark_output("y", g.square(x));
    auto r = jvp(g, {{"x", Tensor::scalar(3.0)}}, {{"x", Tensor::scalar(2.0)}});
    CHECK(r.tangents.at("y").item() == doctest::Approx(12.0));
}

TEST_CASE("jvp: missing tangent for a varied input is an error") {
    Graph g(empty_store());
    int x = g.input("x", 1, 1);
    int z = g.input("z", 1, 1);
    g.mark_output("y", g.add(x, z));
    Bindings in{{"x", Tensor::scalar(1.0)}, {"z", Tensor::scalar(2.0)}};
    CHECK_THROWS_AS(jvp(g, in, {{"x", Tensor::scalar(1.0)}}), std::runtime_error);
}

TEST_CASE("stop-gradient: zero grad, constant for jvp") {
    Graph g(empty_store());
    int x = g.input("x", 1, 1);
    int y = g.mul(x, g.stop_gradient(x));  // y = x * sg(x)
    g.mark_output("y", y);
    Bindings in{{"x", Tensor::scalar(3.0)}};
    auto gr = grad(g, in, "y");
    CHECK(gr.wrt_inputs.at("x").item() == doctest::Approx(3.0));  // only the live factor
    auto jr = jvp(g, in, {{"x", Tensor::scalar(1.0)}});
    CHECK(jr.tangents.at("y").item() == doctest::Approx(3.0));
}

// random graphs composed from the closed primitive set
namespace {

struct RandomGraph {
    Graph g;
    Bindings in;
    explicit RandomGraph(std::shared_ptr<ParamStore> s) : g(std::move(s)) {}
};

std::unique_ptr<RandomGraph> build_random_graph(uint64_t seed) {
    Rng rng(seed);
    auto store = std::make_shared<ParamStore>();
    auto rg = std::make_unique<RandomGraph>(store);
    Graph& g = rg->g;

    int rows = rng.uniform_int(2, 4);
    int cols = rng.uniform_int(2, 5);
    store->add("w", random_tensor(rng, cols, cols, 0.5));
    int x = g.input("x", rows, cols);
    rg->in["x"] = random_tensor(rng, rows, cols, 0.8);

    int cur = g.matmul(x, g.param("w"));
    int depth = rng.uniform_int(3, 7);
    for (int d = 0; d < depth; ++d) {
        switch (rng.uniform_int(0, 8)) {
            case 0: cur = g.tanh(cur); break;
            case 1: cur = g.sigmoid(cur); break;
            case 2: cur = g.layernorm_rows(cur); break;
            case 3: cur = g.softmax_rows(cur); break;
            case 4: cur = g.matmul(cur, g.param("w")); break;
            case 5: cur = g.add(cur, g.square(cur)); break;
            case 6: cur = g.mul(cur, g.constant(Tensor(1, g.cols(cur), std::vector<double>(g.cols(cur), 0.7)))); break;
            case 7: cur = g.exp(g.scale(cur, 0.3)); break;
            case 8: cur = g.log(g.add_scalar(g.square(cur), 1.0)); break;
        }
    }
    g.mark_output("f", g.mean_all(cur));
    return rg;
}

}  // namespace

TEST_CASE("reverse vs forward consistency on 100 random composed graphs") {
    for (uint64_t seed = 1; seed <= 100; ++seed) {
        auto rg = build_random_graph(seed);
        Rng rng(seed * 977 + 3);
        Bindings tan;
        for (const auto& [name, t] : rg->in) tan[name] = random_tensor(rng, t.rows(), t.cols());

        auto gr = grad(rg->g, rg->in, "f");
        auto jr = jvp(rg->g, rg->in, tan);

        // <grad, v> against the jvp
        double dot = 0.0;
        for (const auto& [name, t] : tan)
            for (size_t i = 0; i < t.size(); ++i) dot += t[i] * gr.wrt_inputs.at(name)[i];
        CHECK(rel_err(jr.tangents.at("f").item(), dot) <= 1e-6);

        // both against central differences
        auto fdg = fd_grad_inputs(rg->g, rg->in, "f", 1e-5);
        CHECK(rel_err(gr.wrt_inputs.at("x"), fdg.at("x")) <= 1e-4);
        auto fdp = fd_grad_params(rg->g, rg->in, "f", 1e-5);
        CHECK(rel_err(gr.wrt_params.at("w"), fdp.at("w")) <= 1e-4);
        double fdd = fd_directional(rg->g, rg->in, tan, "f", 1e-4);
        CHECK(rel_err(jr.tangents.at("f").item(), fdd) <= 1e-4);
    }
}

TEST_CASE("broadcast add/mul gradients match finite differences") {
    Graph g(empty_store());
    int x = g.input("x", 3, 4);
    int row = g.input("row", 1, 4);
    int col = g.input("col", 3, 1);
    int s = g.input("s", 1, 1);
    int y = g.mul(g.add(g.add(x, row), col), s);
    g.mark_output("f", g.sum_all(g.square(y)));

    Rng rng(5);
    Bindings in{{"x", random_tensor(rng, 3, 4)},
                {"row", random_tensor(rng, 1, 4)},
                {"col", random_tensor(rng, 3, 1)},
                {"s", random_tensor(rng, 1, 1)}};
    auto r = grad(g, in, "f");
    auto fd = fd_grad_inputs(g, in, "f", 1e-5);
    for (const auto& name : {"x", "row", "col", "s"})
        CHECK(rel_err(r.wrt_inputs.at(name), fd.at(name)) <= 1e-4);
}

TEST_CASE("matmul transpose variants match finite differences") {
    for (int mode = 0; mode < 4; ++mode) {
        bool ta = mode & 1, tb = mode & 2;
        Graph g(empty_store());
        int a = g.input("a", ta ? 4 : 3, ta ? 3 : 4);
        int b = g.input("b", tb ? 2 : 4, tb ? 4 : 2);
        g.mark_output("f", g.sum_all(g.square(g.matmul(a, b, ta, tb))));
        Rng rng(31 + mode);
        Bindings in{{"a", random_tensor(rng, ta ? 4 : 3, ta ? 3 : 4)},
                    {"b", random_tensor(rng, tb ? 2 : 4, tb ? 4 : 2)}};
        auto r = grad(g, in, "f");
        auto fd = fd_grad_inputs(g, in, "f", 1e-5);
        CHECK(rel_err(r.wrt_inputs.at("a"), fd.at("a")) <= 1e-4);
        CHECK(rel_err(r.wrt_inputs.at("b"), fd.at("b")) <= 1e-4);
    }
}

TEST_CASE("concat/slice round trip and gradients") {
    Graph g(empty_store());
    int a = g.input("a", 2, 3);
    int b = g.input("b", 2, 2);
    int c = g.concat(a, b, 1);
    int back = g.slice(c, 0, 2, 0, 3);
    g.mark_output("f", g.sum_all(g.mul(back, back)));
    Rng rng(17);
    Bindings in{{"a", random_tensor(rng, 2, 3)}, {"b", random_tensor(rng, 2, 2)}};
    auto r = grad(g, in, "f");
    auto fd = fd_grad_inputs(g, in, "f", 1e-5);
    CHECK(rel_err(r.wrt_inputs.at("a"), fd.at("a")) <= 1e-4);
    // b does not reach the output
    for (size_t i = 0; i < 4; ++i) CHECK(r.wrt_inputs.at("b")[i] == 0.0);
}

TEST_CASE("softplus and smooth_abs behave at the anchor points") {
    Graph g(empty_store());
    int x = g.input("x", 1, 1);
    g.mark_output("sp", g.softplus(x));
    g.mark_output("sa", g.smooth_abs(x, 1e-6));
    auto r0 = evaluate(g, {{"x", Tensor::scalar(0.0)}});
    CHECK(r0.outputs.at("sp").item() == doctest::Approx(std::log(2.0)));
    CHECK(r0.outputs.at("sa").item() == doctest::Approx(0.0));
    auto r1 = evaluate(g, {{"x", Tensor::scalar(5.0)}});
    CHECK(r1.outputs.at("sa").item() == doctest::Approx(5.0).epsilon(1e-6));
}

TEST_CASE("tensor construction rejects NaN and shape mismatch") {
    CHECK_THROWS_AS(Tensor(1, 2, {1.0, std::nan("")}), std::runtime_error);
    CHECK_THROWS_AS(Tensor(2, 2, {1.0, 2.0}), std::runtime_error);
}

TEST_CASE("kernels: OpenMP variants are bit-identical to the serial reference") {
    Rng rng(23);
    for (int trial = 0; trial < 5; ++trial) {
        int m = rng.uniform_int(30, 90), k = rng.uniform_int(30, 90), n = rng.uniform_int(30, 90);
        auto a = random_tensor(rng, m, k);
        auto b = random_tensor(rng, k, n);
        Tensor cs = Tensor::zeros(m, n), cp = Tensor::zeros(m, n);
        kernels::matmul_serial(a.values().data(), b.values().data(), cs.values().data(),
                               m, k, n, false, false);
        kernels::matmul_omp(a.values().data(), b.values().data(), cp.values().data(),
                            m, k, n, false, false);
        for (size_t i = 0; i < cs.size(); ++i) CHECK(cs[i] == cp[i]);

        Tensor ss = Tensor::zeros(m, k), sp = Tensor::zeros(m, k);
        kernels::softmax_rows_serial(a.values().data(), ss.values().data(), m, k);
        kernels::softmax_rows_omp(a.values().data(), sp.values().data(), m, k);
        for (size_t i = 0; i < ss.size(); ++i) CHECK(ss[i] == sp[i]);

        Tensor ls = Tensor::zeros(m, k), lp = Tensor::zeros(m, k);
        kernels::layernorm_rows_serial(a.values().data(), ls.values().data(), m, k, 1e-5);
        kernels::layernorm_rows_omp(a.values().data(), lp.values().data(), m, k, 1e-5);
        for (size_t i = 0; i < ls.size(); ++i) CHECK(ls[i] == lp[i]);
    }
}

TEST_CASE("training determinism: identical seeds give bit-identical parameters") {
    auto run = [](uint64_t seed) {
        Rng rng(seed);
        auto store = std::make_shared<ParamStore>();
        store->add("w", random_tensor(rng, 3, 3, 0.3));
        store->add("b", Tensor::zeros(1, 3));
        Graph g(store);
        int x = g.input("x", 2, 3);
        int t = g.input("t", 2, 3);
        int y = g.add(g.matmul(x, g.param("w")), g.param("b"));
        g.mark_output("loss", g.mean_all(g.square(g.sub(y, t))));
        AdamW opt(store, AdamWConfig{.lr = 1e-2});
        for (int s = 0; s < 25; ++s) {
            Rng step_rng = rng.fork(s);
            Bindings in{{"x", random_tensor(step_rng, 2, 3)}, {"t", random_tensor(step_rng, 2, 3)}};
            auto r = grad(g, in, "loss");
            opt.step(r.wrt_params);
        }
        return std::make_pair(store->get("w"), store->get("b"));
    };
    auto [w1, b1] = run(42);
    auto [w2, b2] = run(42);
    for (size_t i = 0; i < w1.size(); ++i) CHECK(w1[i] == w2[i]);
    for (size_t i = 0; i < b1.size(); ++i) CHECK(b1[i] == b2[i]);
}

TEST_CASE("checkpoint round trip preserves names, order, and bits") {
    Rng rng(3);
    auto store = std::make_shared<ParamStore>();
    store->add("alpha", random_tensor(rng, 2, 5));
    store->add("beta", random_tensor(rng, 1, 1));
    store->add("gamma", random_tensor(rng, 4, 3));
    std::string path = "ckpt_roundtrip_test.bin";
    save_checkpoint(path, *store);
    auto loaded = load_checkpoint(path);
    REQUIRE(loaded->names() == store->names());
    for (const auto& name : store->names()) {
        const Tensor& a = store->get(name);
        const Tensor& b = loaded->get(name);
        REQUIRE(a.shape() == b.shape());
        for (size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
    }
    std::remove(path.c_str());
}
