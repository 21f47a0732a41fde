// autodiff.hpp — reverse-mode automatic differentiation over whole tensors.
//
// A Graph is a tape: every operation appends one node holding its value and a
// closure that scatters the node's adjoint into its parents. Creation order is
// a topological order, so backward() is a single reverse sweep. Gradients are
// exact (no numerical approximation anywhere).
#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "mosaic/tensor.hpp"

namespace mosaic {

class Graph;

struct Var {
    Graph* graph = nullptr;
    int id = -1;
    bool valid() const { return graph != nullptr && id >= 0; }
};

class Graph {
public:
    struct Node {
        Tensor value;
        Tensor grad;  // allocated lazily, same shape as value
        bool requires_grad = false;
        bool grad_ready = false;
        std::function<void(Graph&)> backward;  // empty for leaves
    };

    Var leaf(Tensor value, bool requires_grad) {
        nodes_.push_back({std::move(value), Tensor{}, requires_grad, false, nullptr});
        return Var{this, static_cast<int>(nodes_.size()) - 1};
    }

    Var constant(Tensor value) { return leaf(std::move(value), false); }
    Var constant(double v) { return leaf(Tensor::scalar(v), false); }

    const Tensor& value(Var v) const { return nodes_[v.id].value; }

    const Tensor& grad(Var v) const {
        const Node& n = nodes_[v.id];
        if (!n.requires_grad)
            throw NumericalError("gradient requested for a detached quantity");
        if (!n.grad_ready)
            throw NumericalError("gradient requested before backward pass");
        return n.grad;
    }

    // Accumulate `g` into the adjoint of node `id` (no-op for detached nodes).
    void accumulate(int id, const Tensor& g) {
        Node& n = nodes_[id];
        if (!n.requires_grad) return;
        if (!n.grad_ready) {
            n.grad = Tensor(n.value.rows, n.value.cols);
            n.grad_ready = true;
        }
        for (int i = 0; i < g.size(); ++i) n.grad[i] += g[i];
    }

    Tensor& grad_buffer(int id) { return nodes_[id].grad; }

    // Reverse sweep from a scalar loss node. Seeds d(loss)/d(loss) = 1.
    void backward(Var loss) {
        Node& root = nodes_[loss.id];
        if (root.value.size() != 1)
            throw NumericalError("backward: loss must be a scalar, got " +
                                 root.value.shape_str());
        if (!root.requires_grad)
            throw NumericalError("backward: loss does not depend on any trainable quantity");
        accumulate(loss.id, Tensor::scalar(1.0));
        for (int i = loss.id; i >= 0; --i) {
            Node& n = nodes_[i];
            if (n.requires_grad && n.grad_ready && n.backward) n.backward(*this);
        }
    }

    void reset() { nodes_.clear(); }
    std::size_t node_count() const { return nodes_.size(); }

    // ── Operations ──────────────────────────────────────────────────────────

    Var add(Var a, Var b) {
        require_same_shape(value(a), value(b), "graph add");
        Tensor out = value(a) + value(b);
        return unary_or_binary(std::move(out), a, b, [a, b](Graph& g, const Tensor& dout) {
            g.accumulate(a.id, dout);
            g.accumulate(b.id, dout);
        });
    }

    Var sub(Var a, Var b) {
        require_same_shape(value(a), value(b), "graph sub");
        Tensor out = value(a) - value(b);
        return unary_or_binary(std::move(out), a, b, [a, b](Graph& g, const Tensor& dout) {
            g.accumulate(a.id, dout);
            g.accumulate(b.id, dout * -1.0);
        });
    }

    Var mul(Var a, Var b) {
        require_same_shape(value(a), value(b), "graph mul");
        Tensor out = hadamard(value(a), value(b));
        return unary_or_binary(std::move(out), a, b, [a, b](Graph& g, const Tensor& dout) {
            g.accumulate(a.id, hadamard(dout, g.value(b)));
            g.accumulate(b.id, hadamard(dout, g.value(a)));
        });
    }

    Var scale(Var a, double s) {
        Tensor out = value(a) * s;
        return unary_or_binary(std::move(out), a, Var{}, [a, s](Graph& g, const Tensor& dout) {
            g.accumulate(a.id, dout * s);
        });
    }

    Var mm(Var a, Var b) {
        Tensor out = matmul(value(a), value(b));
        return unary_or_binary(std::move(out), a, b, [a, b](Graph& g, const Tensor& dout) {
            g.accumulate(a.id, matmul_nt(dout, g.value(b)));
            g.accumulate(b.id, matmul_tn(g.value(a), dout));
        });
    }

    // A · Bᵀ
    Var mm_nt(Var a, Var b) {
        Tensor out = matmul_nt(value(a), value(b));
        return unary_or_binary(std::move(out), a, b, [a, b](Graph& g, const Tensor& dout) {
            g.accumulate(a.id, matmul(dout, g.value(b)));
            g.accumulate(b.id, matmul_tn(dout, g.value(a)));
        });
    }

    // M + 1·vᵀ  (adds row vector v to every row of M; v may be 1×C or C×1)
    Var add_row(Var m, Var v) {
        const Tensor& mv = value(m);
        const Tensor& vv = value(v);
        if (vv.size() != mv.cols)
            throw NumericalError("add_row: vector length " + vv.shape_str() +
                                 " does not match columns of " + mv.shape_str());
        Tensor out = mv;
        for (int r = 0; r < out.rows; ++r)
            for (int c = 0; c < out.cols; ++c) out.at(r, c) += vv[c];
        return unary_or_binary(std::move(out), m, v, [m, v](Graph& g, const Tensor& dout) {
            g.accumulate(m.id, dout);
            Tensor dv(g.value(v).rows, g.value(v).cols);
            for (int r = 0; r < dout.rows; ++r)
                for (int c = 0; c < dout.cols; ++c) dv[c] += dout.at(r, c);
            g.accumulate(v.id, dv);
        });
    }

    // Rows of `table` selected by `indices` (embedding lookup).
    Var gather_rows(Var table, std::vector<int> indices) {
        const Tensor& tv = value(table);
        Tensor out(static_cast<int>(indices.size()), tv.cols);
        for (std::size_t i = 0; i < indices.size(); ++i) {
            if (indices[i] < 0 || indices[i] >= tv.rows)
                throw NumericalError("gather_rows: index out of range");
            for (int c = 0; c < tv.cols; ++c)
                out.at(static_cast<int>(i), c) = tv.at(indices[i], c);
        }
        return unary_or_binary(std::move(out), table, Var{},
                               [table, indices](Graph& g, const Tensor& dout) {
                                   Tensor dt(g.value(table).rows, g.value(table).cols);
                                   for (std::size_t i = 0; i < indices.size(); ++i)
                                       for (int c = 0; c < dt.cols; ++c)
                                           dt.at(indices[i], c) += dout.at(static_cast<int>(i), c);
                                   g.accumulate(table.id, dt);
                               });
    }

    Var softmax_rows(Var a) {
        const Tensor& av = value(a);
        Tensor out(av.rows, av.cols);
        for (int r = 0; r < av.rows; ++r) {
            double m = -std::numeric_limits<double>::infinity();
            for (int c = 0; c < av.cols; ++c) m = std::max(m, av.at(r, c));
            double z = 0.0;
            for (int c = 0; c < av.cols; ++c) z += std::exp(av.at(r, c) - m);
            for (int c = 0; c < av.cols; ++c) out.at(r, c) = std::exp(av.at(r, c) - m) / z;
        }
        Var node = unary_or_binary(std::move(out), a, Var{}, nullptr);
        const int out_id = node.id;
        nodes_[out_id].backward = [a, out_id](Graph& g) {
            const Tensor& y = g.nodes_[out_id].value;
            const Tensor& dy = g.nodes_[out_id].grad;
            Tensor dx(y.rows, y.cols);
            for (int r = 0; r < y.rows; ++r) {
                double dot = 0.0;
                for (int c = 0; c < y.cols; ++c) dot += dy.at(r, c) * y.at(r, c);
                for (int c = 0; c < y.cols; ++c)
                    dx.at(r, c) = y.at(r, c) * (dy.at(r, c) - dot);
            }
            g.accumulate(a.id, dx);
        };
        return node;
    }

    // x · sigmoid(x), smooth everywhere.
    Var silu(Var a) {
        const Tensor& av = value(a);
        Tensor out(av.rows, av.cols);
        for (int i = 0; i < av.size(); ++i) {
            const double s = 1.0 / (1.0 + std::exp(-av[i]));
            out[i] = av[i] * s;
        }
        return unary_or_binary(std::move(out), a, Var{}, [a](Graph& g, const Tensor& dout) {
            const Tensor& x = g.value(a);
            Tensor dx(x.rows, x.cols);
            for (int i = 0; i < x.size(); ++i) {
                const double s = 1.0 / (1.0 + std::exp(-x[i]));
                dx[i] = dout[i] * (s + x[i] * s * (1.0 - s));
            }
            g.accumulate(a.id, dx);
        });
    }

    Var square(Var a) { return mul(a, a); }

    Var sum(Var a) {
        Tensor out = Tensor::scalar(value(a).sum());
        return unary_or_binary(std::move(out), a, Var{}, [a](Graph& g, const Tensor& dout) {
            Tensor da(g.value(a).rows, g.value(a).cols, dout[0]);
            g.accumulate(a.id, da);
        });
    }

    Var mean(Var a) {
        const int n = value(a).size();
        return scale(sum(a), 1.0 / n);
    }

    // Euclidean norm as a scalar node. Undefined gradient at exactly zero.
    Var l2_norm(Var a) {
        const double nrm = value(a).norm2();
        if (nrm == 0.0)
            throw NumericalError("l2_norm: zero-norm input has no gradient");
        Tensor out = Tensor::scalar(nrm);
        return unary_or_binary(std::move(out), a, Var{}, [a, nrm](Graph& g, const Tensor& dout) {
            g.accumulate(a.id, g.value(a) * (dout[0] / nrm));
        });
    }

    // x / ‖x‖₂ (unit-norm copy).
    Var normalize(Var a) {
        const double nrm = value(a).norm2();
        if (nrm == 0.0)
            throw NumericalError("normalize: zero-norm input");
        Tensor out = value(a) * (1.0 / nrm);
        Var node = unary_or_binary(std::move(out), a, Var{}, nullptr);
        const int out_id = node.id;
        nodes_[out_id].backward = [a, out_id, nrm](Graph& g) {
            const Tensor& y = g.nodes_[out_id].value;  // = x/nrm
            const Tensor& dy = g.nodes_[out_id].grad;
            double dot = 0.0;
            for (int i = 0; i < y.size(); ++i) dot += dy[i] * y[i];
            Tensor dx(y.rows, y.cols);
            for (int i = 0; i < y.size(); ++i) dx[i] = (dy[i] - dot * y[i]) / nrm;
            g.accumulate(a.id, dx);
        };
        return node;
    }

    // Single column of a matrix, as a column vector.
    Var column(Var a, int col) {
        const Tensor& av = value(a);
        if (col < 0 || col >= av.cols)
            throw NumericalError("column: index out of range");
        Tensor out(av.rows, 1);
        for (int r = 0; r < av.rows; ++r) out[r] = av.at(r, col);
        return unary_or_binary(std::move(out), a, Var{}, [a, col](Graph& g, const Tensor& dout) {
            Tensor da(g.value(a).rows, g.value(a).cols);
            for (int r = 0; r < da.rows; ++r) da.at(r, col) = dout[r];
            g.accumulate(a.id, da);
        });
    }

    // Mean over columns for each row position: (R×C) → (R×1).
    Var row_mean(Var a) {
        const Tensor& av = value(a);
        Tensor out(av.rows, 1);
        for (int r = 0; r < av.rows; ++r) {
            double s = 0.0;
            for (int c = 0; c < av.cols; ++c) s += av.at(r, c);
            out[r] = s / av.cols;
        }
        return unary_or_binary(std::move(out), a, Var{}, [a](Graph& g, const Tensor& dout) {
            const Tensor& x = g.value(a);
            Tensor da(x.rows, x.cols);
            for (int r = 0; r < x.rows; ++r)
                for (int c = 0; c < x.cols; ++c) da.at(r, c) = dout[r] / x.cols;
            g.accumulate(a.id, da);
        });
    }

    Var dot(Var a, Var b) {
        require_same_shape(value(a), value(b), "graph dot");
        double s = 0.0;
        for (int i = 0; i < value(a).size(); ++i) s += value(a)[i] * value(b)[i];
        Tensor out = Tensor::scalar(s);
        return unary_or_binary(std::move(out), a, b, [a, b](Graph& g, const Tensor& dout) {
            g.accumulate(a.id, g.value(b) * dout[0]);
            g.accumulate(b.id, g.value(a) * dout[0]);
        });
    }

    Var exp(Var a) {
        const Tensor& av = value(a);
        Tensor out(av.rows, av.cols);
        for (int i = 0; i < av.size(); ++i) out[i] = std::exp(av[i]);
        Var node = unary_or_binary(std::move(out), a, Var{}, nullptr);
        const int out_id = node.id;
        nodes_[out_id].backward = [a, out_id](Graph& g) {
            g.accumulate(a.id, hadamard(g.nodes_[out_id].grad, g.nodes_[out_id].value));
        };
        return node;
    }

    Var log(Var a) {
        const Tensor& av = value(a);
        Tensor out(av.rows, av.cols);
        for (int i = 0; i < av.size(); ++i) {
            if (av[i] <= 0.0) throw NumericalError("log: non-positive input");
            out[i] = std::log(av[i]);
        }
        return unary_or_binary(std::move(out), a, Var{}, [a](Graph& g, const Tensor& dout) {
            const Tensor& x = g.value(a);
            Tensor dx(x.rows, x.cols);
            for (int i = 0; i < x.size(); ++i) dx[i] = dout[i] / x[i];
            g.accumulate(a.id, dx);
        });
    }

private:
    Var unary_or_binary(Tensor out, Var a, Var b,
                        std::function<void(Graph&, const Tensor&)> backward_fn) {
        const bool req = (a.valid() && nodes_[a.id].requires_grad) ||
                         (b.valid() && nodes_[b.id].requires_grad);
        Node node;
        node.value = std::move(out);
        node.requires_grad = req;
        const int id = static_cast<int>(nodes_.size());
        if (req && backward_fn) {
            node.backward = [id, fn = std::move(backward_fn)](Graph& g) {
                fn(g, g.nodes_[id].grad);
            };
        }
        nodes_.push_back(std::move(node));
        return Var{this, id};
    }

    std::vector<Node> nodes_;
};

}  // namespace mosaic
