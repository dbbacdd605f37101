#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "mhp/tensor.hpp"

namespace mhp {

/// Reverse-mode tape over Tensor values. Nodes are appended in forward order;
/// backward() walks them in reverse, so the creation order is the topological
/// order. Closures capture `this`, hence the graph is pinned in place.
class Graph {
public:
    struct Ref {
        int idx = -1;
    };

    Graph() = default;
    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;
    Graph(Graph&&) = delete;
    Graph& operator=(Graph&&) = delete;

    Ref leaf(const Tensor& v, bool track) {
        nodes_.push_back(Node{v, Tensor{}, track, {}});
        return Ref{static_cast<int>(nodes_.size()) - 1};
    }
    Ref constant(Tensor v) { return leaf(std::move(v), false); }

    const Tensor& value(Ref r) const { return nodes_[r.idx].value; }
    const Tensor& grad(Ref r) const { return nodes_[r.idx].grad; }
    std::size_t size() const { return nodes_.size(); }

    /// Seeds d(root)/d(root) = 1 and accumulates gradients into every tracked
    /// node. root must be scalar (1x1).
    void backward(Ref root) {
        if (value(root).size() != 1) throw std::invalid_argument("backward: root must be scalar");
        for (auto& n : nodes_) n.grad = Tensor::zeros(n.value.rows, n.value.cols);
        nodes_[root.idx].grad.data[0] = 1.0;
        for (int i = root.idx; i >= 0; --i)
            if (nodes_[i].back) nodes_[i].back();
    }

    // ---- elementwise binary ----

    Ref add(Ref a, Ref b) {
        Ref o = make(ten::add(value(a), value(b)), {a, b});
        wire(o, [this, a, b, o] {
            acc(a, nodes_[o.idx].grad);
            acc(b, nodes_[o.idx].grad);
        });
        return o;
    }
    Ref sub(Ref a, Ref b) {
        Ref o = make(ten::sub(value(a), value(b)), {a, b});
        wire(o, [this, a, b, o] {
            acc(a, nodes_[o.idx].grad);
            acc(b, ten::neg(nodes_[o.idx].grad));
        });
        return o;
    }
    Ref mul(Ref a, Ref b) {
        Ref o = make(ten::mul(value(a), value(b)), {a, b});
        wire(o, [this, a, b, o] {
            acc(a, ten::mul(nodes_[o.idx].grad, value(b)));
            acc(b, ten::mul(nodes_[o.idx].grad, value(a)));
        });
        return o;
    }
    Ref div(Ref a, Ref b) {
        Ref o = make(ten::div(value(a), value(b)), {a, b});
        wire(o, [this, a, b, o] {
            const Tensor& g = nodes_[o.idx].grad;
            acc(a, ten::div(g, value(b)));
            acc(b, ten::neg(ten::mul(ten::div(g, value(b)), value(o))));
        });
        return o;
    }

    // ---- broadcasting ----

    Ref add_rowvec(Ref m, Ref r) {
        Ref o = make(ten::add_rowvec(value(m), value(r)), {m, r});
        wire(o, [this, m, r, o] {
            const Tensor& g = nodes_[o.idx].grad;
            acc(m, g);
            acc(r, col_collapse(g));
        });
        return o;
    }
    Ref mul_rowvec(Ref m, Ref r) {
        Ref o = make(ten::mul_rowvec(value(m), value(r)), {m, r});
        wire(o, [this, m, r, o] {
            const Tensor& g = nodes_[o.idx].grad;
            acc(m, ten::mul_rowvec(g, value(r)));
            acc(r, col_collapse(ten::mul(g, value(m))));
        });
        return o;
    }
    Ref div_rowvec(Ref m, Ref r) {
        Ref o = make(ten::div_rowvec(value(m), value(r)), {m, r});
        wire(o, [this, m, r, o] {
            const Tensor& g = nodes_[o.idx].grad;
            acc(m, ten::div_rowvec(g, value(r)));
            acc(r, ten::neg(ten::div(col_collapse(ten::mul(g, value(o))), value(r))));
        });
        return o;
    }
    Ref mul_colvec(Ref m, Ref c) {
        Ref o = make(ten::mul_colvec(value(m), value(c)), {m, c});
        wire(o, [this, m, c, o] {
            const Tensor& g = nodes_[o.idx].grad;
            acc(m, ten::mul_colvec(g, value(c)));
            acc(c, ten::row_sum(ten::mul(g, value(m))));
        });
        return o;
    }

    // ---- linear algebra ----

    Ref matmul(Ref a, Ref b) {
        Ref o = make(ten::matmul(value(a), value(b)), {a, b});
        wire(o, [this, a, b, o] {
            const Tensor& g = nodes_[o.idx].grad;
            acc(a, ten::matmul(g, ten::transpose(value(b))));
            acc(b, ten::matmul(ten::transpose(value(a)), g));
        });
        return o;
    }
    Ref transpose(Ref a) {
        Ref o = make(ten::transpose(value(a)), {a});
        wire(o, [this, a, o] { acc(a, ten::transpose(nodes_[o.idx].grad)); });
        return o;
    }

    // ---- scalar / unary ----

    Ref scale(Ref a, double c) {
        Ref o = make(ten::scale(value(a), c), {a});
        wire(o, [this, a, o, c] { acc(a, ten::scale(nodes_[o.idx].grad, c)); });
        return o;
    }
    Ref neg(Ref a) { return scale(a, -1.0); }

    Ref exp(Ref a) {
        Ref o = make(ten::map(value(a), [](double x) { return std::exp(x); }), {a});
        wire(o, [this, a, o] { acc(a, ten::mul(nodes_[o.idx].grad, value(o))); });
        return o;
    }
    Ref log(Ref a) {
        Ref o = make(ten::map(value(a), [](double x) { return std::log(x); }), {a});
        wire(o, [this, a, o] { acc(a, ten::div(nodes_[o.idx].grad, value(a))); });
        return o;
    }
    Ref relu(Ref a) {
        Ref o = make(ten::map(value(a), [](double x) { return x > 0.0 ? x : 0.0; }), {a});
        wire(o, [this, a, o] {
            acc(a, ten::zip(nodes_[o.idx].grad, value(a),
                            [](double g, double x) { return x > 0.0 ? g : 0.0; }, "relu_back"));
        });
        return o;
    }
    Ref tanh(Ref a) {
        Ref o = make(ten::map(value(a), [](double x) { return std::tanh(x); }), {a});
        wire(o, [this, a, o] {
            acc(a, ten::zip(nodes_[o.idx].grad, value(o),
                            [](double g, double y) { return g * (1.0 - y * y); }, "tanh_back"));
        });
        return o;
    }
    Ref sigmoid(Ref a) {
        Ref o = make(ten::map(value(a), [](double x) { return ten::sigmoid(x); }), {a});
        wire(o, [this, a, o] {
            acc(a, ten::zip(nodes_[o.idx].grad, value(o),
                            [](double g, double y) { return g * y * (1.0 - y); }, "sigmoid_back"));
        });
        return o;
    }
    Ref softplus0(Ref a) {
        Ref o = make(ten::map(value(a), [](double x) { return ten::softplus0(x); }), {a});
        wire(o, [this, a, o] {
            acc(a, ten::zip(nodes_[o.idx].grad, value(a),
                            [](double g, double x) { return g * ten::sigmoid(x); }, "softplus_back"));
        });
        return o;
    }
    /// (e^{delta*x} - 1)/x elementwise, delta a fixed constant.
    Ref exprel(Ref a, double delta) {
        Ref o = make(ten::map(value(a), [delta](double x) { return ten::exprel_delta(x, delta); }), {a});
        wire(o, [this, a, o, delta] {
            acc(a, ten::zip(nodes_[o.idx].grad, value(a),
                            [delta](double g, double x) { return g * ten::exprel_delta_da(x, delta); },
                            "exprel_back"));
        });
        return o;
    }

    // ---- reductions / reshaping ----

    Ref sum_all(Ref a) {
        Ref o = make(ten::sum_all(value(a)), {a});
        wire(o, [this, a, o] {
            acc(a, Tensor::full(value(a).rows, value(a).cols, nodes_[o.idx].grad.data[0]));
        });
        return o;
    }
    Ref row_sum(Ref a) {
        Ref o = make(ten::row_sum(value(a)), {a});
        wire(o, [this, a, o] {
            const Tensor& g = nodes_[o.idx].grad;
            Tensor ga(value(a).rows, value(a).cols);
            for (int i = 0; i < ga.rows; ++i)
                for (int j = 0; j < ga.cols; ++j) ga(i, j) = g(i, 0);
            acc(a, ga);
        });
        return o;
    }
    Ref concat_cols(Ref a, Ref b) {
        Ref o = make(ten::concat_cols(value(a), value(b)), {a, b});
        wire(o, [this, a, b, o] {
            const Tensor& g = nodes_[o.idx].grad;
            int ca = value(a).cols;
            Tensor ga(value(a).rows, ca), gb(value(b).rows, value(b).cols);
            for (int i = 0; i < g.rows; ++i) {
                for (int j = 0; j < ca; ++j) ga(i, j) = g(i, j);
                for (int j = 0; j < gb.cols; ++j) gb(i, j) = g(i, ca + j);
            }
            acc(a, ga);
            acc(b, gb);
        });
        return o;
    }
    Ref concat_rows(Ref a, Ref b) {
        Ref o = make(ten::concat_rows(value(a), value(b)), {a, b});
        wire(o, [this, a, b, o] {
            const Tensor& g = nodes_[o.idx].grad;
            int ra = value(a).rows;
            Tensor ga(ra, g.cols), gb(g.rows - ra, g.cols);
            std::copy(g.data.begin(), g.data.begin() + ga.size(), ga.data.begin());
            std::copy(g.data.begin() + ga.size(), g.data.end(), gb.data.begin());
            acc(a, ga);
            acc(b, gb);
        });
        return o;
    }
    Ref gather_rows(Ref a, std::vector<int> idx) {
        Ref o = make(ten::gather_rows(value(a), idx), {a});
        wire(o, [this, a, o, idx = std::move(idx)] {
            const Tensor& g = nodes_[o.idx].grad;
            Tensor ga(value(a).rows, value(a).cols);
            for (std::size_t k = 0; k < idx.size(); ++k)
                for (int j = 0; j < ga.cols; ++j) ga(idx[k], j) += g(static_cast<int>(k), j);
            acc(a, ga);
        });
        return o;
    }
    Ref gather_elems(Ref a, std::vector<std::pair<int, int>> idx) {
        Ref o = make(ten::gather_elems(value(a), idx), {a});
        wire(o, [this, a, o, idx = std::move(idx)] {
            const Tensor& g = nodes_[o.idx].grad;
            Tensor ga(value(a).rows, value(a).cols);
            for (std::size_t k = 0; k < idx.size(); ++k)
                ga(idx[k].first, idx[k].second) += g(0, static_cast<int>(k));
            acc(a, ga);
        });
        return o;
    }
    Ref stack_rows(const std::vector<Ref>& rows) {
        std::vector<Tensor> vals;
        vals.reserve(rows.size());
        bool tracked = false;
        for (Ref r : rows) {
            vals.push_back(value(r));
            tracked = tracked || track(r);
        }
        Ref o{push(ten::stack_rows(vals), tracked)};
        if (tracked) {
            nodes_[o.idx].back = [this, rows, o] {
                const Tensor& g = nodes_[o.idx].grad;
                for (std::size_t i = 0; i < rows.size(); ++i) {
                    Tensor gi(1, g.cols);
                    std::copy(g.data.begin() + i * g.cols, g.data.begin() + (i + 1) * g.cols,
                              gi.data.begin());
                    acc(rows[i], gi);
                }
            };
        }
        return o;
    }

    // ---- fused ops with hand backward ----

    Ref softmax_rows(Ref a) {
        Ref o = make(ten::softmax_rows(value(a)), {a});
        wire(o, [this, a, o] {
            const Tensor& g = nodes_[o.idx].grad;
            const Tensor& s = value(o);
            Tensor ga(s.rows, s.cols);
            for (int i = 0; i < s.rows; ++i) {
                double dot = 0.0;
                for (int j = 0; j < s.cols; ++j) dot += g(i, j) * s(i, j);
                for (int j = 0; j < s.cols; ++j) ga(i, j) = s(i, j) * (g(i, j) - dot);
            }
            acc(a, ga);
        });
        return o;
    }
    Ref logsumexp_rows(Ref a) {
        Ref o = make(ten::logsumexp_rows(value(a)), {a});
        wire(o, [this, a, o] {
            const Tensor& g = nodes_[o.idx].grad;
            Tensor sm = ten::softmax_rows(value(a));
            Tensor ga(sm.rows, sm.cols);
            for (int i = 0; i < sm.rows; ++i)
                for (int j = 0; j < sm.cols; ++j) ga(i, j) = g(i, 0) * sm(i, j);
            acc(a, ga);
        });
        return o;
    }
    Ref layer_norm(Ref x, Ref scale, Ref offset) {
        Ref o = make(ten::layer_norm_rows(value(x), value(scale), value(offset)), {x, scale, offset});
        wire(o, [this, x, scale, offset, o] {
            const Tensor& g = nodes_[o.idx].grad;
            const Tensor& xv = value(x);
            const Tensor& sv = value(scale);
            int C = xv.cols;
            Tensor gx(xv.rows, C), gs(1, C), gb(1, C);
            for (int i = 0; i < xv.rows; ++i) {
                double mean = 0.0, var = 0.0;
                for (int j = 0; j < C; ++j) mean += xv(i, j);
                mean /= C;
                for (int j = 0; j < C; ++j) {
                    double d = xv(i, j) - mean;
                    var += d * d;
                }
                var /= C;
                double inv = 1.0 / std::sqrt(var + ten::kLayerNormEps);
                // xhat = (x - mean) * inv; out = xhat*scale + offset
                double mdxh = 0.0, mdxh_xh = 0.0;
                for (int j = 0; j < C; ++j) {
                    double xhat = (xv(i, j) - mean) * inv;
                    double dxhat = g(i, j) * sv.data[j];
                    gs.data[j] += g(i, j) * xhat;
                    gb.data[j] += g(i, j);
                    mdxh += dxhat;
                    mdxh_xh += dxhat * xhat;
                }
                mdxh /= C;
                mdxh_xh /= C;
                for (int j = 0; j < C; ++j) {
                    double xhat = (xv(i, j) - mean) * inv;
                    double dxhat = g(i, j) * sv.data[j];
                    gx(i, j) = inv * (dxhat - mdxh - xhat * mdxh_xh);
                }
            }
            acc(x, gx);
            acc(scale, gs);
            acc(offset, gb);
        });
        return o;
    }

private:
    struct Node {
        Tensor value;
        Tensor grad;
        bool track = false;
        std::function<void()> back;
    };

    bool track(Ref r) const { return nodes_[r.idx].track; }

    int push(Tensor v, bool tracked) {
        nodes_.push_back(Node{std::move(v), Tensor{}, tracked, {}});
        return static_cast<int>(nodes_.size()) - 1;
    }
    Ref make(Tensor v, std::initializer_list<Ref> inputs) {
        bool tracked = false;
        for (Ref r : inputs) tracked = tracked || track(r);
        return Ref{push(std::move(v), tracked)};
    }
    template <class F>
    void wire(Ref o, F&& f) {
        if (nodes_[o.idx].track) nodes_[o.idx].back = std::forward<F>(f);
    }
    void acc(Ref r, const Tensor& g) {
        if (track(r)) ten::add_into(nodes_[r.idx].grad, g);
    }
    // Collapse an RxC gradient onto a 1xC row vector broadcast.
    static Tensor col_collapse(const Tensor& g) {
        Tensor out(1, g.cols);
        for (int i = 0; i < g.rows; ++i)
            for (int j = 0; j < g.cols; ++j) out.data[j] += g(i, j);
        return out;
    }

    std::vector<Node> nodes_;
};

/// Op set recording onto a Graph; parameters registered through param() keep
/// their Refs so callers can read gradients back in registration order.
struct TapeOps {
    using V = Graph::Ref;
    Graph& g;
    std::vector<Graph::Ref> params;

    explicit TapeOps(Graph& graph) : g(graph) {}

    V param(const Tensor& t) {
        V r = g.leaf(t, true);
        params.push_back(r);
        return r;
    }
    V constant(Tensor t) { return g.constant(std::move(t)); }
    const Tensor& val(V v) const { return g.value(v); }

    V add(V a, V b) { return g.add(a, b); }
    V sub(V a, V b) { return g.sub(a, b); }
    V mul(V a, V b) { return g.mul(a, b); }
    V div(V a, V b) { return g.div(a, b); }
    V add_rowvec(V m, V r) { return g.add_rowvec(m, r); }
    V mul_rowvec(V m, V r) { return g.mul_rowvec(m, r); }
    V div_rowvec(V m, V r) { return g.div_rowvec(m, r); }
    V mul_colvec(V m, V c) { return g.mul_colvec(m, c); }
    V matmul(V a, V b) { return g.matmul(a, b); }
    V transpose(V a) { return g.transpose(a); }
    V scale(V a, double c) { return g.scale(a, c); }
    V neg(V a) { return g.neg(a); }
    V exp(V a) { return g.exp(a); }
    V log(V a) { return g.log(a); }
    V relu(V a) { return g.relu(a); }
    V tanh(V a) { return g.tanh(a); }
    V sigmoid(V a) { return g.sigmoid(a); }
    V softplus0(V a) { return g.softplus0(a); }
    V exprel(V a, double delta) { return g.exprel(a, delta); }
    V sum_all(V a) { return g.sum_all(a); }
    V row_sum(V a) { return g.row_sum(a); }
    V concat_cols(V a, V b) { return g.concat_cols(a, b); }
    V concat_rows(V a, V b) { return g.concat_rows(a, b); }
    V gather_rows(V a, std::vector<int> idx) { return g.gather_rows(a, std::move(idx)); }
    V gather_elems(V a, std::vector<std::pair<int, int>> idx) { return g.gather_elems(a, std::move(idx)); }
    V stack_rows(const std::vector<V>& rows) { return g.stack_rows(rows); }
    V softmax_rows(V a) { return g.softmax_rows(a); }
    V logsumexp_rows(V a) { return g.logsumexp_rows(a); }
    V layer_norm(V x, V scale, V offset) { return g.layer_norm(x, scale, offset); }
};

/// Plain-value op set; forwards match TapeOps bit for bit because both call
/// the same ten:: kernels.
struct EvalOps {
    using V = Tensor;

    V param(const Tensor& t) { return t; }
    V constant(Tensor t) { return t; }
    const Tensor& val(const V& v) const { return v; }

    V add(const V& a, const V& b) { return ten::add(a, b); }
    V sub(const V& a, const V& b) { return ten::sub(a, b); }
    V mul(const V& a, const V& b) { return ten::mul(a, b); }
    V div(const V& a, const V& b) { return ten::div(a, b); }
    V add_rowvec(const V& m, const V& r) { return ten::add_rowvec(m, r); }
    V mul_rowvec(const V& m, const V& r) { return ten::mul_rowvec(m, r); }
    V div_rowvec(const V& m, const V& r) { return ten::div_rowvec(m, r); }
    V mul_colvec(const V& m, const V& c) { return ten::mul_colvec(m, c); }
    V matmul(const V& a, const V& b) { return ten::matmul(a, b); }
    V transpose(const V& a) { return ten::transpose(a); }
    V scale(const V& a, double c) { return ten::scale(a, c); }
    V neg(const V& a) { return ten::neg(a); }
    V exp(const V& a) { return ten::map(a, [](double x) { return std::exp(x); }); }
    V log(const V& a) { return ten::map(a, [](double x) { return std::log(x); }); }
    V relu(const V& a) { return ten::map(a, [](double x) { return x > 0.0 ? x : 0.0; }); }
    V tanh(const V& a) { return ten::map(a, [](double x) { return std::tanh(x); }); }
    V sigmoid(const V& a) { return ten::map(a, [](double x) { return ten::sigmoid(x); }); }
    V softplus0(const V& a) { return ten::map(a, [](double x) { return ten::softplus0(x); }); }
    V exprel(const V& a, double delta) {
        return ten::map(a, [delta](double x) { return ten::exprel_delta(x, delta); });
    }
    V sum_all(const V& a) { return ten::sum_all(a); }
    V row_sum(const V& a) { return ten::row_sum(a); }
    V concat_cols(const V& a, const V& b) { return ten::concat_cols(a, b); }
    V concat_rows(const V& a, const V& b) { return ten::concat_rows(a, b); }
    V gather_rows(const V& a, std::vector<int> idx) { return ten::gather_rows(a, idx); }
    V gather_elems(const V& a, std::vector<std::pair<int, int>> idx) { return ten::gather_elems(a, idx); }
    V stack_rows(const std::vector<V>& rows) { return ten::stack_rows(rows); }
    V softmax_rows(const V& a) { return ten::softmax_rows(a); }
    V logsumexp_rows(const V& a) { return ten::logsumexp_rows(a); }
    V layer_norm(const V& x, const V& scale, const V& offset) {
        return ten::layer_norm_rows(x, scale, offset);
    }
};

}  // namespace mhp
