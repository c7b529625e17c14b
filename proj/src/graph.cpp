#include "adamz/graph.hpp"

#include <cmath>
#include <sstream>

#include "adamz/kernels.hpp"

namespace adamz {

namespace {

long product(const std::vector<int>& shape) {
    long p = 1;
    for (int d : shape) p *= d;
    return p;
}

std::string shape_str(const std::vector<int>& shape) {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < shape.size(); ++i) {
        if (i) os << "x";
        os << shape[i];
    }
    os << "]";
    return os.str();
}

void require_2d(const Tensor& t, const char* what) {
    if (t.shape().size() != 2) {
        throw ShapeError(std::string(what) + " expects a 2-d tensor, got " + shape_str(t.shape()));
    }
}

void require_same_graph(const Tensor& a, const Tensor& b) {
    if (a.graph() != b.graph()) {
        throw ShapeError("operands belong to different graphs");
    }
}

constexpr double kLogFloor = 1e-12;

}  // namespace

// --- Parameter ----------------------------------------------------------

Parameter::Parameter(std::vector<int> s, std::vector<double> v)
    : shape(std::move(s)), value(std::move(v)) {
    if (product(shape) != static_cast<long>(value.size())) {
        throw ShapeError("parameter value size does not match shape " + shape_str(shape));
    }
    grad.assign(value.size(), 0.0);
}

Parameter Parameter::zeros(std::vector<int> s) {
    const long n = product(s);
    return Parameter(std::move(s), std::vector<double>(static_cast<size_t>(n), 0.0));
}

void Parameter::zero_grad() { grad.assign(grad.size(), 0.0); }

// --- Tensor accessors ----------------------------------------------------

const std::vector<int>& Tensor::shape() const { return graph_->node(id_).shape; }
const std::vector<double>& Tensor::values() const { return graph_->node(id_).values; }
const std::vector<double>& Tensor::grad() const { return graph_->node(id_).grad; }
int Tensor::size() const { return static_cast<int>(graph_->node(id_).values.size()); }

double Tensor::value() const {
    const auto& v = graph_->node(id_).values;
    if (v.size() != 1) {
        throw ShapeError("value() requires a scalar tensor, got " + shape_str(shape()));
    }
    return v[0];
}

// --- Graph ----------------------------------------------------------------

int Graph::push(Node n) {
    n.grad.assign(n.values.size(), 0.0);
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
}

Tensor Graph::param(Parameter& p) {
    Node n;
    n.op = Op::leaf;
    n.shape = p.shape;
    n.values = p.value;
    n.bound = &p;
    return Tensor(this, push(std::move(n)));
}

Tensor Graph::constant(std::vector<int> shape, std::vector<double> values) {
    if (product(shape) != static_cast<long>(values.size())) {
        throw ShapeError("constant value size does not match shape " + shape_str(shape));
    }
    Node n;
    n.op = Op::constant;
    n.shape = std::move(shape);
    n.values = std::move(values);
    return Tensor(this, push(std::move(n)));
}

// --- ops -------------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_same_graph(a, b);
    require_2d(a, "matmul");
    require_2d(b, "matmul");
    const auto& sa = a.shape();
    const auto& sb = b.shape();
    if (sa[1] != sb[0]) {
        throw ShapeError("matmul inner dimensions disagree: " + shape_str(sa) + " * " + shape_str(sb));
    }
    Graph* g = a.graph();
    const int m = sa[0], k = sa[1], n = sb[1];
    Graph::Node out;
    out.op = Graph::Op::matmul;
    out.in0 = a.id();
    out.in1 = b.id();
    out.shape = {m, n};
    out.values.resize(static_cast<size_t>(m) * n);
    kernels::matmul_nn(g->node(a.id()).values.data(), g->node(b.id()).values.data(),
                       out.values.data(), m, k, n);
    return g->wrap(g->push(std::move(out)));
}

Tensor add_bias(const Tensor& x, const Tensor& b) {
    require_same_graph(x, b);
    require_2d(x, "add_bias");
    if (b.shape().size() != 1 || b.shape()[0] != x.shape()[1]) {
        throw ShapeError("add_bias bias shape " + shape_str(b.shape()) +
                         " does not match trailing dimension of " + shape_str(x.shape()));
    }
    Graph* g = x.graph();
    const int m = x.shape()[0], n = x.shape()[1];
    Graph::Node out;
    out.op = Graph::Op::add_bias;
    out.in0 = x.id();
    out.in1 = b.id();
    out.shape = x.shape();
    out.values.resize(static_cast<size_t>(m) * n);
    const auto& xv = x.values();
    const auto& bv = b.values();
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) {
            out.values[static_cast<size_t>(i) * n + j] = xv[static_cast<size_t>(i) * n + j] + bv[static_cast<size_t>(j)];
        }
    }
    return g->wrap(g->push(std::move(out)));
}

Tensor relu(const Tensor& x) {
    Graph* g = x.graph();
    Graph::Node out;
    out.op = Graph::Op::relu;
    out.in0 = x.id();
    out.shape = x.shape();
    out.values.resize(x.values().size());
    const auto& xv = x.values();
    for (size_t i = 0; i < xv.size(); ++i) out.values[i] = xv[i] > 0.0 ? xv[i] : 0.0;
    return g->wrap(g->push(std::move(out)));
}

Tensor sigmoid(const Tensor& x) {
    Graph* g = x.graph();
    Graph::Node out;
    out.op = Graph::Op::sigmoid;
    out.in0 = x.id();
    out.shape = x.shape();
    out.values.resize(x.values().size());
    const auto& xv = x.values();
    for (size_t i = 0; i < xv.size(); ++i) {
        const double v = xv[i];
        if (v >= 0.0) {
            out.values[i] = 1.0 / (1.0 + std::exp(-v));
        } else {
            const double e = std::exp(v);
            out.values[i] = e / (1.0 + e);
        }
    }
    return g->wrap(g->push(std::move(out)));
}

Tensor softmax_rows(const Tensor& x) {
    require_2d(x, "softmax_rows");
    Graph* g = x.graph();
    Graph::Node out;
    out.op = Graph::Op::softmax_rows;
    out.in0 = x.id();
    out.shape = x.shape();
    out.values.resize(x.values().size());
    kernels::softmax_rows(x.values().data(), out.values.data(), x.shape()[0], x.shape()[1]);
    return g->wrap(g->push(std::move(out)));
}

Tensor log_softmax(const Tensor& x) {
    require_2d(x, "log_softmax");
    if (x.shape()[1] < 1) throw ShapeError("log_softmax requires at least one column");
    Graph* g = x.graph();
    Graph::Node out;
    out.op = Graph::Op::log_softmax;
    out.in0 = x.id();
    out.shape = x.shape();
    out.values.resize(x.values().size());
    kernels::log_softmax_rows(x.values().data(), out.values.data(), x.shape()[0], x.shape()[1]);
    return g->wrap(g->push(std::move(out)));
}

Tensor scale(const Tensor& x, double factor) {
    Graph* g = x.graph();
    Graph::Node out;
    out.op = Graph::Op::scale;
    out.in0 = x.id();
    out.factor = factor;
    out.shape = x.shape();
    out.values.resize(x.values().size());
    const auto& xv = x.values();
    for (size_t i = 0; i < xv.size(); ++i) out.values[i] = factor * xv[i];
    return g->wrap(g->push(std::move(out)));
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require_same_graph(a, b);
    if (a.shape() != b.shape()) {
        throw ShapeError("mul shapes disagree: " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    }
    Graph* g = a.graph();
    Graph::Node out;
    out.op = Graph::Op::mul;
    out.in0 = a.id();
    out.in1 = b.id();
    out.shape = a.shape();
    out.values.resize(a.values().size());
    const auto& av = a.values();
    const auto& bv = b.values();
    for (size_t i = 0; i < av.size(); ++i) out.values[i] = av[i] * bv[i];
    return g->wrap(g->push(std::move(out)));
}

Tensor sum(const Tensor& x) {
    Graph* g = x.graph();
    Graph::Node out;
    out.op = Graph::Op::sum;
    out.in0 = x.id();
    out.shape = {1};
    double acc = 0.0;
    for (double v : x.values()) acc += v;
    out.values = {acc};
    return g->wrap(g->push(std::move(out)));
}

Tensor reshape(const Tensor& x, std::vector<int> shape) {
    if (product(shape) != static_cast<long>(x.values().size())) {
        throw ShapeError("reshape " + shape_str(x.shape()) + " -> " + shape_str(shape) +
                         " changes element count");
    }
    Graph* g = x.graph();
    Graph::Node out;
    out.op = Graph::Op::reshape;
    out.in0 = x.id();
    out.shape = std::move(shape);
    out.values = x.values();
    return g->wrap(g->push(std::move(out)));
}

Tensor split_heads(const Tensor& x, int batch, int seq, int heads) {
    require_2d(x, "split_heads");
    const int rows = x.shape()[0], d = x.shape()[1];
    if (rows != batch * seq) {
        throw ShapeError("split_heads row count " + shape_str(x.shape()) + " does not equal batch*seq");
    }
    if (heads < 1 || d % heads != 0) {
        throw ShapeError("split_heads: model dimension " + std::to_string(d) +
                         " is not divisible by head count " + std::to_string(heads));
    }
    const int hd = d / heads;
    Graph* g = x.graph();
    Graph::Node out;
    out.op = Graph::Op::split_heads;
    out.in0 = x.id();
    out.batch = batch;
    out.seq = seq;
    out.heads = heads;
    out.shape = {batch * heads * seq, hd};
    out.values.resize(x.values().size());
    const auto& xv = x.values();
    for (int b = 0; b < batch; ++b) {
        for (int h = 0; h < heads; ++h) {
            for (int s = 0; s < seq; ++s) {
                const double* src = xv.data() + (static_cast<long>(b) * seq + s) * d + static_cast<long>(h) * hd;
                double* dst = out.values.data() + ((static_cast<long>(b) * heads + h) * seq + s) * hd;
                for (int j = 0; j < hd; ++j) dst[j] = src[j];
            }
        }
    }
    return g->wrap(g->push(std::move(out)));
}

Tensor merge_heads(const Tensor& x, int batch, int seq, int heads) {
    require_2d(x, "merge_heads");
    const int rows = x.shape()[0], hd = x.shape()[1];
    if (rows != batch * heads * seq) {
        throw ShapeError("merge_heads row count " + shape_str(x.shape()) + " does not equal batch*heads*seq");
    }
    const int d = hd * heads;
    Graph* g = x.graph();
    Graph::Node out;
    out.op = Graph::Op::merge_heads;
    out.in0 = x.id();
    out.batch = batch;
    out.seq = seq;
    out.heads = heads;
    out.shape = {batch * seq, d};
    out.values.resize(x.values().size());
    const auto& xv = x.values();
    for (int b = 0; b < batch; ++b) {
        for (int h = 0; h < heads; ++h) {
            for (int s = 0; s < seq; ++s) {
                const double* src = xv.data() + ((static_cast<long>(b) * heads + h) * seq + s) * hd;
                double* dst = out.values.data() + (static_cast<long>(b) * seq + s) * d + static_cast<long>(h) * hd;
                for (int j = 0; j < hd; ++j) dst[j] = src[j];
            }
        }
    }
    return g->wrap(g->push(std::move(out)));
}

Tensor batched_matmul(const Tensor& a, const Tensor& b, int groups, bool transpose_b) {
    require_same_graph(a, b);
    require_2d(a, "batched_matmul");
    require_2d(b, "batched_matmul");
    if (groups < 1 || a.shape()[0] % groups != 0 || b.shape()[0] % groups != 0) {
        throw ShapeError("batched_matmul: rows not divisible into " + std::to_string(groups) + " groups");
    }
    const int m = a.shape()[0] / groups;
    const int k = a.shape()[1];
    int n;
    if (transpose_b) {
        if (b.shape()[1] != k) {
            throw ShapeError("batched_matmul(a, b^T) inner dimensions disagree: " +
                             shape_str(a.shape()) + " vs " + shape_str(b.shape()));
        }
        n = b.shape()[0] / groups;
    } else {
        if (b.shape()[0] / groups != k) {
            throw ShapeError("batched_matmul inner dimensions disagree: " +
                             shape_str(a.shape()) + " vs " + shape_str(b.shape()));
        }
        n = b.shape()[1];
    }
    Graph* g = a.graph();
    Graph::Node out;
    out.op = transpose_b ? Graph::Op::batched_matmul_nt : Graph::Op::batched_matmul_nn;
    out.in0 = a.id();
    out.in1 = b.id();
    out.groups = groups;
    out.shape = {groups * m, n};
    out.values.resize(static_cast<size_t>(groups) * m * n);
    if (transpose_b) {
        kernels::batched_matmul_nt(a.values().data(), b.values().data(), out.values.data(),
                                   groups, m, k, n);
    } else {
        kernels::batched_matmul_nn(a.values().data(), b.values().data(), out.values.data(),
                                   groups, m, k, n);
    }
    return g->wrap(g->push(std::move(out)));
}

Tensor bce_loss(const Tensor& pred, const std::vector<double>& target) {
    require_2d(pred, "bce_loss");
    if (pred.shape()[1] != 1) {
        throw ShapeError("bce_loss expects predictions shaped [m x 1], got " + shape_str(pred.shape()));
    }
    if (static_cast<size_t>(pred.shape()[0]) != target.size()) {
        throw ShapeError("bce_loss target count " + std::to_string(target.size()) +
                         " does not match predictions " + shape_str(pred.shape()));
    }
    Graph* g = pred.graph();
    Graph::Node out;
    out.op = Graph::Op::bce_loss;
    out.in0 = pred.id();
    out.target = target;
    out.shape = {1};
    const auto& pv = pred.values();
    const size_t m = target.size();
    double acc = 0.0;
    for (size_t i = 0; i < m; ++i) {
        const double p = pv[i] > kLogFloor ? pv[i] : kLogFloor;
        const double q = (1.0 - pv[i]) > kLogFloor ? (1.0 - pv[i]) : kLogFloor;
        acc += target[i] * std::log(p) + (1.0 - target[i]) * std::log(q);
    }
    out.values = {-acc / static_cast<double>(m)};
    return g->wrap(g->push(std::move(out)));
}

Tensor nll_loss(const Tensor& logp, const std::vector<int>& target) {
    require_2d(logp, "nll_loss");
    const int m = logp.shape()[0], n = logp.shape()[1];
    if (static_cast<size_t>(m) != target.size()) {
        throw ShapeError("nll_loss target count " + std::to_string(target.size()) +
                         " does not match predictions " + shape_str(logp.shape()));
    }
    for (size_t i = 0; i < target.size(); ++i) {
        if (target[i] < 0 || target[i] >= n) {
            throw ShapeError("nll_loss class index " + std::to_string(target[i]) + " at row " +
                             std::to_string(i) + " is outside [0, " + std::to_string(n) + ")");
        }
    }
    Graph* g = logp.graph();
    Graph::Node out;
    out.op = Graph::Op::nll_loss;
    out.in0 = logp.id();
    out.classes = target;
    out.shape = {1};
    const auto& lv = logp.values();
    double acc = 0.0;
    for (int i = 0; i < m; ++i) acc += lv[static_cast<size_t>(i) * n + target[static_cast<size_t>(i)]];
    out.values = {-acc / static_cast<double>(m)};
    return g->wrap(g->push(std::move(out)));
}

// --- backward ---------------------------------------------------------------

void Graph::backward_node(int id) {
    Node& nd = nodes_[static_cast<size_t>(id)];
    const auto& go = nd.grad;
    switch (nd.op) {
        case Op::leaf:
        case Op::constant:
            break;
        case Op::matmul: {
            Node& a = node(nd.in0);
            Node& b = node(nd.in1);
            const int m = a.shape[0], k = a.shape[1], n = b.shape[1];
            // dA += dC * B^T ; dB += A^T * dC
            kernels::matmul_nt(go.data(), b.values.data(), a.grad.data(), m, n, k, true);
            kernels::matmul_tn(a.values.data(), go.data(), b.grad.data(), k, m, n, true);
            break;
        }
        case Op::add_bias: {
            Node& x = node(nd.in0);
            Node& b = node(nd.in1);
            const int m = x.shape[0], n = x.shape[1];
            for (size_t i = 0; i < go.size(); ++i) x.grad[i] += go[i];
            for (int i = 0; i < m; ++i) {
                for (int j = 0; j < n; ++j) b.grad[static_cast<size_t>(j)] += go[static_cast<size_t>(i) * n + j];
            }
            break;
        }
        case Op::relu: {
            Node& x = node(nd.in0);
            for (size_t i = 0; i < go.size(); ++i) {
                if (x.values[i] > 0.0) x.grad[i] += go[i];
            }
            break;
        }
        case Op::sigmoid: {
            Node& x = node(nd.in0);
            for (size_t i = 0; i < go.size(); ++i) {
                const double y = nd.values[i];
                x.grad[i] += go[i] * y * (1.0 - y);
            }
            break;
        }
        case Op::softmax_rows: {
            Node& x = node(nd.in0);
            kernels::softmax_rows_backward(nd.values.data(), go.data(), x.grad.data(),
                                           nd.shape[0], nd.shape[1]);
            break;
        }
        case Op::log_softmax: {
            Node& x = node(nd.in0);
            kernels::log_softmax_rows_backward(nd.values.data(), go.data(), x.grad.data(),
                                               nd.shape[0], nd.shape[1]);
            break;
        }
        case Op::scale: {
            Node& x = node(nd.in0);
            for (size_t i = 0; i < go.size(); ++i) x.grad[i] += nd.factor * go[i];
            break;
        }
        case Op::mul: {
            Node& a = node(nd.in0);
            Node& b = node(nd.in1);
            for (size_t i = 0; i < go.size(); ++i) {
                a.grad[i] += go[i] * b.values[i];
                b.grad[i] += go[i] * a.values[i];
            }
            break;
        }
        case Op::sum: {
            Node& x = node(nd.in0);
            const double gv = go[0];
            for (size_t i = 0; i < x.grad.size(); ++i) x.grad[i] += gv;
            break;
        }
        case Op::reshape: {
            Node& x = node(nd.in0);
            for (size_t i = 0; i < go.size(); ++i) x.grad[i] += go[i];
            break;
        }
        case Op::split_heads: {
            Node& x = node(nd.in0);
            const int d = x.shape[1];
            const int hd = d / nd.heads;
            for (int b = 0; b < nd.batch; ++b) {
                for (int h = 0; h < nd.heads; ++h) {
                    for (int s = 0; s < nd.seq; ++s) {
                        const double* src = go.data() + ((static_cast<long>(b) * nd.heads + h) * nd.seq + s) * hd;
                        double* dst = x.grad.data() + (static_cast<long>(b) * nd.seq + s) * d + static_cast<long>(h) * hd;
                        for (int j = 0; j < hd; ++j) dst[j] += src[j];
                    }
                }
            }
            break;
        }
        case Op::merge_heads: {
            Node& x = node(nd.in0);
            const int hd = x.shape[1];
            const int d = hd * nd.heads;
            for (int b = 0; b < nd.batch; ++b) {
                for (int h = 0; h < nd.heads; ++h) {
                    for (int s = 0; s < nd.seq; ++s) {
                        const double* src = go.data() + (static_cast<long>(b) * nd.seq + s) * d + static_cast<long>(h) * hd;
                        double* dst = x.grad.data() + ((static_cast<long>(b) * nd.heads + h) * nd.seq + s) * hd;
                        for (int j = 0; j < hd; ++j) dst[j] += src[j];
                    }
                }
            }
            break;
        }
        case Op::batched_matmul_nn: {
            Node& a = node(nd.in0);
            Node& b = node(nd.in1);
            const int G = nd.groups;
            const int m = a.shape[0] / G, k = a.shape[1], n = b.shape[1];
            // per group: dA += dC * B^T ; dB += A^T * dC
            kernels::batched_matmul_nt(go.data(), b.values.data(), a.grad.data(), G, m, n, k, true);
            kernels::batched_matmul_tn(a.values.data(), go.data(), b.grad.data(), G, k, m, n, true);
            break;
        }
        case Op::batched_matmul_nt: {
            Node& a = node(nd.in0);
            Node& b = node(nd.in1);
            const int G = nd.groups;
            const int m = a.shape[0] / G, k = a.shape[1], n = b.shape[0] / G;
            // out[g] = A B^T: dA += dC * B ; dB += dC^T * A
            kernels::batched_matmul_nn(go.data(), b.values.data(), a.grad.data(), G, m, n, k, true);
            kernels::batched_matmul_tn(go.data(), a.values.data(), b.grad.data(), G, n, m, k, true);
            break;
        }
        case Op::bce_loss: {
            Node& p = node(nd.in0);
            const size_t m = nd.target.size();
            const double gv = go[0] / static_cast<double>(m);
            for (size_t i = 0; i < m; ++i) {
                const double pv = p.values[i];
                double d = 0.0;
                if (pv > kLogFloor) d -= nd.target[i] / pv;
                if (1.0 - pv > kLogFloor) d += (1.0 - nd.target[i]) / (1.0 - pv);
                p.grad[i] += gv * d;
            }
            break;
        }
        case Op::nll_loss: {
            Node& lp = node(nd.in0);
            const int n = lp.shape[1];
            const size_t m = nd.classes.size();
            const double gv = go[0] / static_cast<double>(m);
            for (size_t i = 0; i < m; ++i) {
                lp.grad[i * static_cast<size_t>(n) + static_cast<size_t>(nd.classes[i])] -= gv;
            }
            break;
        }
    }
}

void Graph::backward(const Tensor& loss) {
    if (loss.graph() != this) throw ShapeError("backward: tensor is not on this graph");
    Node& ln = node(loss.id());
    if (ln.values.size() != 1) {
        throw ShapeError("backward requires a scalar loss, got " + shape_str(ln.shape));
    }
    for (Node& n : nodes_) n.grad.assign(n.grad.size(), 0.0);
    ln.grad[0] = 1.0;
    for (int id = loss.id(); id >= 0; --id) backward_node(id);
    for (Node& n : nodes_) {
        if (n.op == Op::leaf && n.bound != nullptr) {
            for (size_t i = 0; i < n.grad.size(); ++i) n.bound->grad[i] += n.grad[i];
        }
    }
}

void backward(const Tensor& loss) { loss.graph()->backward(loss); }

// --- attention ----------------------------------------------------------------

AttentionResult multi_head_attention(const Tensor& x, int heads, const AttentionParams& w) {
    if (x.shape().size() != 3) {
        throw ShapeError("multi_head_attention expects [batch x seq x d], got " + shape_str(x.shape()));
    }
    const int batch = x.shape()[0], seq = x.shape()[1], d = x.shape()[2];
    if (heads < 1 || d % heads != 0) {
        throw ShapeError("multi_head_attention: model dimension " + std::to_string(d) +
                         " is not divisible by head count " + std::to_string(heads));
    }
    const int hd = d / heads;
    const int groups = batch * heads;

    Tensor tokens = reshape(x, {batch * seq, d});
    Tensor q = add_bias(matmul(tokens, w.wq), w.bq);
    Tensor k = add_bias(matmul(tokens, w.wk), w.bk);
    Tensor v = add_bias(matmul(tokens, w.wv), w.bv);

    Tensor qh = split_heads(q, batch, seq, heads);
    Tensor kh = split_heads(k, batch, seq, heads);
    Tensor vh = split_heads(v, batch, seq, heads);

    Tensor scores = scale(batched_matmul(qh, kh, groups, /*transpose_b=*/true),
                          1.0 / std::sqrt(static_cast<double>(hd)));
    Tensor attn = softmax_rows(scores);
    Tensor ctx = batched_matmul(attn, vh, groups, /*transpose_b=*/false);

    Tensor merged = merge_heads(ctx, batch, seq, heads);
    Tensor proj = add_bias(matmul(merged, w.wo), w.bo);
    return {reshape(proj, {batch, seq, d}), attn};
}

}  // namespace adamz
