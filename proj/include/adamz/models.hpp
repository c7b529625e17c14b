#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "adamz/datasets.hpp"
#include "adamz/graph.hpp"

namespace adamz {

enum class LossKind { bce, nll };

// A parameter-initialized computation-graph builder. forward() records the
// whole pass onto the caller's graph; a model instance is confined to one
// simulation.
class Model {
public:
    virtual ~Model() = default;

    // input: a constant node shaped input_shape(batch)
    virtual Tensor forward(Graph& g, const Tensor& input) = 0;
    virtual std::vector<int> input_shape(int batch) const = 0;
    virtual int output_width() const = 0;  // 1 = binary sigmoid head, else class count
    virtual std::string_view kind() const = 0;

    std::vector<Parameter*> parameters();
    int parameter_count() const;

protected:
    std::vector<Parameter> params_;
};

// Linear(2,10) -> ReLU -> Linear(10,1) -> Sigmoid. 41 parameters.
std::unique_ptr<Model> build_circles_mlp(uint64_t seed);

// 28-token rows -> Linear(28,28) embedding -> 4-head self-attention ->
// flatten -> Linear(784,128) -> ReLU -> Linear(128,10) -> LogSoftmax.
std::unique_ptr<Model> build_mnist_attention(uint64_t seed);

// Percent correct. Binary: prediction = (output >= 0.5), ties to class 1.
// Multiclass: argmax of the log-probabilities (first max wins).
double accuracy(Model& model, const DatasetSplit& data);

}  // namespace adamz
