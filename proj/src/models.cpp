#include "adamz/models.hpp"

#include <cmath>

#include "adamz/rng.hpp"

namespace adamz {

std::vector<Parameter*> Model::parameters() {
    std::vector<Parameter*> out;
    out.reserve(params_.size());
    for (Parameter& p : params_) out.push_back(&p);
    return out;
}

int Model::parameter_count() const {
    int n = 0;
    for (const Parameter& p : params_) n += p.size();
    return n;
}

namespace {

// uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)), row-major draw order
Parameter init_weight(Rng& rng, int fan_in, int fan_out) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::vector<double> w(static_cast<size_t>(fan_in) * fan_out);
    for (double& v : w) v = rng.uniform(-bound, bound);
    return Parameter({fan_in, fan_out}, std::move(w));
}

class CirclesMlp final : public Model {
public:
    explicit CirclesMlp(uint64_t seed) {
        Rng rng(Rng::derive(seed, 0x1417));
        params_.push_back(init_weight(rng, 2, 10));   // w1
        params_.push_back(Parameter::zeros({10}));    // b1
        params_.push_back(init_weight(rng, 10, 1));   // w2
        params_.push_back(Parameter::zeros({1}));     // b2
    }

    Tensor forward(Graph& g, const Tensor& input) override {
        Tensor w1 = g.param(params_[0]), b1 = g.param(params_[1]);
        Tensor w2 = g.param(params_[2]), b2 = g.param(params_[3]);
        Tensor h = relu(add_bias(matmul(input, w1), b1));
        return sigmoid(add_bias(matmul(h, w2), b2));
    }

    std::vector<int> input_shape(int batch) const override { return {batch, 2}; }
    int output_width() const override { return 1; }
    std::string_view kind() const override { return "circles-mlp"; }
};

class MnistAttention final : public Model {
public:
    static constexpr int kSeq = 28;
    static constexpr int kDim = 28;
    static constexpr int kHeads = 4;
    static constexpr int kHidden = 128;
    static constexpr int kClasses = 10;

    explicit MnistAttention(uint64_t seed) {
        Rng rng(Rng::derive(seed, 0x1417));
        params_.push_back(init_weight(rng, kDim, kDim));          // embed w
        params_.push_back(Parameter::zeros({kDim}));              // embed b
        for (int i = 0; i < 4; ++i) {                             // wq, wk, wv, wo
            params_.push_back(init_weight(rng, kDim, kDim));
            params_.push_back(Parameter::zeros({kDim}));
        }
        params_.push_back(init_weight(rng, kSeq * kDim, kHidden));  // fc1 w
        params_.push_back(Parameter::zeros({kHidden}));             // fc1 b
        params_.push_back(init_weight(rng, kHidden, kClasses));     // fc2 w
        params_.push_back(Parameter::zeros({kClasses}));            // fc2 b
    }

    Tensor forward(Graph& g, const Tensor& input) override {
        const int batch = input.shape()[0];
        Tensor we = g.param(params_[0]), be = g.param(params_[1]);
        AttentionParams att{g.param(params_[2]), g.param(params_[3]), g.param(params_[4]),
                            g.param(params_[5]), g.param(params_[6]), g.param(params_[7]),
                            g.param(params_[8]), g.param(params_[9])};
        Tensor w3 = g.param(params_[10]), b3 = g.param(params_[11]);
        Tensor w4 = g.param(params_[12]), b4 = g.param(params_[13]);

        Tensor tokens = reshape(input, {batch * kSeq, kDim});
        Tensor emb = add_bias(matmul(tokens, we), be);
        Tensor attended = multi_head_attention(reshape(emb, {batch, kSeq, kDim}), kHeads, att).out;
        Tensor flat = reshape(attended, {batch, kSeq * kDim});
        Tensor hidden = relu(add_bias(matmul(flat, w3), b3));
        return log_softmax(add_bias(matmul(hidden, w4), b4));
    }

    std::vector<int> input_shape(int batch) const override { return {batch, kSeq, kDim}; }
    int output_width() const override { return kClasses; }
    std::string_view kind() const override { return "mnist-attention"; }
};

}  // namespace

std::unique_ptr<Model> build_circles_mlp(uint64_t seed) {
    return std::make_unique<CirclesMlp>(seed);
}

std::unique_ptr<Model> build_mnist_attention(uint64_t seed) {
    return std::make_unique<MnistAttention>(seed);
}

double accuracy(Model& model, const DatasetSplit& data) {
    const int chunk = 256;
    long correct = 0;
    std::vector<double> feat;
    std::vector<double> lab;
    for (int start = 0; start < data.n; start += chunk) {
        const int end = std::min(data.n, start + chunk);
        const int m = end - start;
        std::vector<int> idx(static_cast<size_t>(m));
        for (int i = 0; i < m; ++i) idx[static_cast<size_t>(i)] = start + i;
        gather(data, idx, feat, lab);
        Graph g;
        Tensor out = model.forward(g, g.constant(model.input_shape(m), feat));
        const auto& ov = out.values();
        const int w = model.output_width();
        for (int i = 0; i < m; ++i) {
            int pred;
            if (w == 1) {
                pred = ov[static_cast<size_t>(i)] >= 0.5 ? 1 : 0;
            } else {
                int best = 0;
                for (int j = 1; j < w; ++j) {
                    if (ov[static_cast<size_t>(i) * w + j] > ov[static_cast<size_t>(i) * w + best]) best = j;
                }
                pred = best;
            }
            if (pred == static_cast<int>(lab[static_cast<size_t>(i)])) ++correct;
        }
    }
    return 100.0 * static_cast<double>(correct) / static_cast<double>(data.n);
}

}  // namespace adamz
