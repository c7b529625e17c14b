#pragma once

#include <cstdint>
#include <deque>
#include <string>
#include <vector>

#include "adamz/errors.hpp"

namespace adamz {

// Trainable value with persistent gradient storage. Gradients accumulate
// across backward passes until zero_grad().
struct Parameter {
    std::vector<int> shape;
    std::vector<double> value;
    std::vector<double> grad;

    Parameter() = default;
    Parameter(std::vector<int> s, std::vector<double> v);
    static Parameter zeros(std::vector<int> s);

    int size() const { return static_cast<int>(value.size()); }
    void zero_grad();
};

class Graph;

// Cheap handle to a node on a Graph's tape.
class Tensor {
public:
    Tensor() = default;

    const std::vector<int>& shape() const;
    const std::vector<double>& values() const;
    const std::vector<double>& grad() const;
    int size() const;
    double value() const;  // scalar tensors only

    Graph* graph() const { return graph_; }
    int id() const { return id_; }

private:
    friend class Graph;
    Tensor(Graph* g, int id) : graph_(g), id_(id) {}

    Graph* graph_ = nullptr;
    int id_ = -1;
};

// Tape of one forward pass, rebuilt each training step. Nodes are appended in
// execution order; backward() walks them in exact reverse insertion order and
// finally adds leaf gradients into their bound Parameters.
class Graph {
public:
    Graph() = default;
    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;

    // Leaf bound to an external parameter; backward() accumulates into p.grad.
    Tensor param(Parameter& p);
    // Unbound leaf (inputs, targets-as-values); its gradient is discarded.
    Tensor constant(std::vector<int> shape, std::vector<double> values);

    // Seeds d(loss)/d(loss) = 1 and runs the tape backwards.
    void backward(const Tensor& loss);

    int node_count() const { return static_cast<int>(nodes_.size()); }

private:
    friend class Tensor;

    enum class Op : uint8_t {
        leaf,
        constant,
        matmul,
        add_bias,
        relu,
        sigmoid,
        softmax_rows,
        log_softmax,
        scale,
        mul,
        sum,
        reshape,
        split_heads,
        merge_heads,
        batched_matmul_nn,  // out[g] = a[g] * b[g]
        batched_matmul_nt,  // out[g] = a[g] * b[g]^T
        bce_loss,
        nll_loss,
    };

    struct Node {
        Op op;
        int in0 = -1;
        int in1 = -1;
        std::vector<int> shape;
        std::vector<double> values;
        std::vector<double> grad;
        Parameter* bound = nullptr;   // leaf
        double factor = 0.0;          // scale
        int groups = 0;               // batched matmul
        int batch = 0, seq = 0, heads = 0;  // split/merge heads
        std::vector<double> target;   // bce targets
        std::vector<int> classes;     // nll class indices
    };

    int push(Node n);
    Tensor wrap(int id) { return Tensor(this, id); }
    Node& node(int id) { return nodes_[static_cast<size_t>(id)]; }
    const Node& node(int id) const { return nodes_[static_cast<size_t>(id)]; }
    void backward_node(int id);

    // deque: references into nodes stay valid while the tape grows
    std::deque<Node> nodes_;

    friend Tensor matmul(const Tensor&, const Tensor&);
    friend Tensor add_bias(const Tensor&, const Tensor&);
    friend Tensor relu(const Tensor&);
    friend Tensor sigmoid(const Tensor&);
    friend Tensor softmax_rows(const Tensor&);
    friend Tensor log_softmax(const Tensor&);
    friend Tensor scale(const Tensor&, double);
    friend Tensor mul(const Tensor&, const Tensor&);
    friend Tensor sum(const Tensor&);
    friend Tensor reshape(const Tensor&, std::vector<int>);
    friend Tensor split_heads(const Tensor&, int, int, int);
    friend Tensor merge_heads(const Tensor&, int, int, int);
    friend Tensor batched_matmul(const Tensor&, const Tensor&, int, bool);
    friend Tensor bce_loss(const Tensor&, const std::vector<double>&);
    friend Tensor nll_loss(const Tensor&, const std::vector<int>&);
};

// --- ops --------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add_bias(const Tensor& x, const Tensor& b);
Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor softmax_rows(const Tensor& x);
Tensor log_softmax(const Tensor& x);
Tensor scale(const Tensor& x, double factor);
Tensor mul(const Tensor& a, const Tensor& b);  // elementwise
Tensor sum(const Tensor& x);                   // -> scalar

// Metadata-only reshape (values copied through; gradient passes through).
Tensor reshape(const Tensor& x, std::vector<int> shape);

// [batch*seq x d] -> [batch*heads*seq x d/heads]; groups are (batch, head)
// blocks of seq rows. merge_heads is the inverse.
Tensor split_heads(const Tensor& x, int batch, int seq, int heads);
Tensor merge_heads(const Tensor& x, int batch, int seq, int heads);

// Grouped product of two tensors laid out as `groups` contiguous blocks.
Tensor batched_matmul(const Tensor& a, const Tensor& b, int groups, bool transpose_b);

// -mean(t*log(p) + (1-t)*log(1-p)); log arguments floored at 1e-12.
Tensor bce_loss(const Tensor& pred, const std::vector<double>& target);
// -mean over rows of logp[row, target[row]].
Tensor nll_loss(const Tensor& logp, const std::vector<int>& target);

void backward(const Tensor& loss);

// --- multi-head self-attention -----------------------------------------

// Projection parameters, already placed on the graph as leaves.
struct AttentionParams {
    Tensor wq, bq, wk, bk, wv, bv, wo, bo;
};

struct AttentionResult {
    Tensor out;   // same shape as the input
    Tensor attn;  // softmax probabilities, [batch*heads*seq x seq]
};

// Scaled dot-product self-attention over x: [batch x seq x d]. Composed from
// the primitive ops above, so its gradient is covered by their checks plus
// one end-to-end check.
AttentionResult multi_head_attention(const Tensor& x, int heads, const AttentionParams& w);

}  // namespace adamz
