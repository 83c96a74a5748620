#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace compass {

enum class LayerKind { Conv, Linear, Pool, BatchNorm, Activation, ElementwiseAdd, Concat, Flatten };
enum class PoolMode { Max, Avg, GlobalAvg };

std::string_view to_string(LayerKind kind);
std::optional<LayerKind> parse_layer_kind(std::string_view s);

// Crossbar-mappable layers; everything else executes on the vector units.
inline bool is_crossbar_kind(LayerKind k) { return k == LayerKind::Conv || k == LayerKind::Linear; }

struct Shape {
    uint32_t channels = 0;
    uint32_t height = 0;
    uint32_t width = 0;

    uint64_t elements() const { return uint64_t{channels} * height * width; }
    bool operator==(const Shape&) const = default;
};

struct LayerNode {
    int id = 0;
    std::string name;
    LayerKind kind = LayerKind::Activation;
    std::vector<int> inputs;

    // Conv / Linear
    uint32_t cin = 0;
    uint32_t cout = 0;
    uint32_t kh = 1;
    uint32_t kw = 1;
    uint32_t stride = 1;
    uint32_t padding = 0;

    // Pool (stride and padding above are shared)
    uint32_t window = 0;
    PoolMode pool_mode = PoolMode::Max;
    bool ceil_mode = false;

    uint32_t weight_bits = 4;

    // Filled by shape inference.
    Shape out_shape;

    bool operator==(const LayerNode&) const = default;
};

class NetworkGraph {
public:
    NetworkGraph() = default;

    // Validates references, orders the nodes topologically (stable with
    // respect to the given order) and infers every output shape.
    NetworkGraph(std::string name, Shape input_shape, std::vector<LayerNode> nodes);

    const std::string& name() const { return name_; }
    const Shape& input_shape() const { return input_shape_; }
    const std::vector<LayerNode>& nodes() const { return nodes_; }
    size_t size() const { return nodes_.size(); }

    size_t index_of(int id) const;
    const LayerNode& node(int id) const { return nodes_[index_of(id)]; }
    bool contains(int id) const { return index_.count(id) != 0; }

    // Consumers of each node, indexed by topological position.
    const std::vector<std::vector<size_t>>& consumers() const { return consumers_; }
    const std::vector<std::vector<size_t>>& producers() const { return producers_; }

    bool operator==(const NetworkGraph& o) const {
        return name_ == o.name_ && input_shape_ == o.input_shape_ && nodes_ == o.nodes_;
    }

private:
    std::string name_;
    Shape input_shape_;
    std::vector<LayerNode> nodes_;
    std::unordered_map<int, size_t> index_;
    std::vector<std::vector<size_t>> consumers_;
    std::vector<std::vector<size_t>> producers_;
};

struct LayerStats {
    uint64_t weight_bits = 0;
    uint64_t rows = 0;
    uint64_t cols_cells = 0;
    uint64_t mvm_invocations_per_sample = 0;
};

// Throws NotMappable for non-Conv/Linear nodes.
LayerStats layer_stats(const NetworkGraph& graph, int id, uint32_t cell_bits = 1);

NetworkGraph parse_network(std::string_view json_text);
NetworkGraph load_network(const std::filesystem::path& path);
std::string serialize_network(const NetworkGraph& graph);

// vgg16, resnet18 or squeezenet (v1.1), 224x224 RGB input, 4-bit weights.
NetworkGraph build_benchmark(std::string_view name);
const std::vector<std::string>& benchmark_names();

NetworkGraph resolve_network(const std::string& name_or_path);

struct WeightFootprint {
    double conv_mib = 0;
    double linear_mib = 0;
    double total_mib() const { return conv_mib + linear_mib; }
};
WeightFootprint weight_footprint(const NetworkGraph& graph);

}  // namespace compass
