#include "compass/network_ir.hpp"

#include <fstream>
#include <queue>
#include <sstream>

#include <json.hpp>

#include "compass/error.hpp"

namespace compass {

namespace {

constexpr int kNetworkFormatVersion = 1;

uint32_t conv_out_dim(uint32_t in, uint32_t k, uint32_t stride, uint32_t pad, bool ceil_mode, const LayerNode& n) {
    const int64_t span = int64_t{in} + 2 * int64_t{pad} - k;
    if (span < 0 || stride == 0)
        throw ShapeError("node " + std::to_string(n.id) + " (" + n.name + "): window larger than padded input");
    const int64_t steps = ceil_mode ? (span + stride - 1) / stride : span / stride;
    return static_cast<uint32_t>(steps + 1);
}

Shape infer_shape(const LayerNode& n, const std::vector<Shape>& in) {
    auto fail = [&](const std::string& what) {
        return ShapeError("node " + std::to_string(n.id) + " (" + n.name + "): " + what);
    };
    auto require_inputs = [&](size_t lo, size_t hi) {
        if (in.size() < lo || in.size() > hi) throw fail("wrong number of inputs");
    };
    switch (n.kind) {
    case LayerKind::Conv: {
        require_inputs(1, 1);
        if (n.cin == 0 || n.cout == 0) throw fail("cin/cout must be >= 1");
        if (in[0].channels != n.cin)
            throw fail("expects " + std::to_string(n.cin) + " input channels, got " + std::to_string(in[0].channels));
        return {n.cout, conv_out_dim(in[0].height, n.kh, n.stride, n.padding, false, n),
                conv_out_dim(in[0].width, n.kw, n.stride, n.padding, false, n)};
    }
    case LayerKind::Linear:
        require_inputs(1, 1);
        if (n.cin == 0 || n.cout == 0) throw fail("cin/cout must be >= 1");
        if (in[0].height != 1 || in[0].width != 1 || in[0].channels != n.cin)
            throw fail("expects a flat input of " + std::to_string(n.cin) + " features");
        return {n.cout, 1, 1};
    case LayerKind::Pool:
        require_inputs(1, 1);
        if (n.pool_mode == PoolMode::GlobalAvg) return {in[0].channels, 1, 1};
        return {in[0].channels, conv_out_dim(in[0].height, n.window, n.stride, n.padding, n.ceil_mode, n),
                conv_out_dim(in[0].width, n.window, n.stride, n.padding, n.ceil_mode, n)};
    case LayerKind::BatchNorm:
    case LayerKind::Activation:
        require_inputs(1, 1);
        return in[0];
    case LayerKind::Flatten:
        require_inputs(1, 1);
        return {static_cast<uint32_t>(in[0].elements()), 1, 1};
    case LayerKind::ElementwiseAdd:
        require_inputs(2, SIZE_MAX);
        for (const auto& s : in)
            if (!(s == in[0])) throw fail("elementwise add of mismatched shapes");
        return in[0];
    case LayerKind::Concat: {
        require_inputs(2, SIZE_MAX);
        Shape out = in[0];
        out.channels = 0;
        for (const auto& s : in) {
            if (s.height != in[0].height || s.width != in[0].width) throw fail("concat of mismatched spatial dims");
            out.channels += s.channels;
        }
        return out;
    }
    }
    throw fail("unknown kind");
}

std::string_view to_string(PoolMode m) {
    switch (m) {
    case PoolMode::Max: return "max";
    case PoolMode::Avg: return "avg";
    case PoolMode::GlobalAvg: return "global_avg";
    }
    return "max";
}

}  // namespace

std::string_view to_string(LayerKind kind) {
    switch (kind) {
    case LayerKind::Conv: return "Conv";
    case LayerKind::Linear: return "Linear";
    case LayerKind::Pool: return "Pool";
    case LayerKind::BatchNorm: return "BatchNorm";
    case LayerKind::Activation: return "Activation";
    case LayerKind::ElementwiseAdd: return "ElementwiseAdd";
    case LayerKind::Concat: return "Concat";
    case LayerKind::Flatten: return "Flatten";
    }
    return "?";
}

std::optional<LayerKind> parse_layer_kind(std::string_view s) {
    for (auto k : {LayerKind::Conv, LayerKind::Linear, LayerKind::Pool, LayerKind::BatchNorm, LayerKind::Activation,
                   LayerKind::ElementwiseAdd, LayerKind::Concat, LayerKind::Flatten})
        if (to_string(k) == s) return k;
    return std::nullopt;
}

NetworkGraph::NetworkGraph(std::string name, Shape input_shape, std::vector<LayerNode> nodes)
    : name_(std::move(name)), input_shape_(input_shape) {
    if (input_shape.elements() == 0) throw ShapeError("input shape must be non-empty");

    std::unordered_map<int, size_t> given;
    for (size_t i = 0; i < nodes.size(); ++i)
        if (!given.emplace(nodes[i].id, i).second)
            throw ParseError("duplicate node id " + std::to_string(nodes[i].id));

    // Kahn's algorithm, always releasing the lowest original position first.
    std::vector<size_t> indegree(nodes.size(), 0);
    std::vector<std::vector<size_t>> out_edges(nodes.size());
    size_t sources = 0;
    for (size_t i = 0; i < nodes.size(); ++i) {
        if (nodes[i].inputs.empty()) ++sources;
        for (int in : nodes[i].inputs) {
            auto it = given.find(in);
            if (it == given.end())
                throw ParseError("node " + std::to_string(nodes[i].id) + " references missing id " + std::to_string(in));
            out_edges[it->second].push_back(i);
            ++indegree[i];
        }
    }
    if (nodes.empty()) throw ParseError("network has no nodes");
    if (sources != 1) throw ParseError("network must have exactly one source node, found " + std::to_string(sources));

    std::priority_queue<size_t, std::vector<size_t>, std::greater<>> ready;
    for (size_t i = 0; i < nodes.size(); ++i)
        if (indegree[i] == 0) ready.push(i);
    std::vector<size_t> order;
    order.reserve(nodes.size());
    while (!ready.empty()) {
        size_t i = ready.top();
        ready.pop();
        order.push_back(i);
        for (size_t j : out_edges[i])
            if (--indegree[j] == 0) ready.push(j);
    }
    if (order.size() != nodes.size()) throw CycleError("network graph contains a cycle");

    nodes_.reserve(nodes.size());
    for (size_t i : order) nodes_.push_back(std::move(nodes[i]));
    for (size_t i = 0; i < nodes_.size(); ++i) index_.emplace(nodes_[i].id, i);

    consumers_.assign(nodes_.size(), {});
    producers_.assign(nodes_.size(), {});
    std::vector<Shape> shapes(nodes_.size());
    for (size_t i = 0; i < nodes_.size(); ++i) {
        std::vector<Shape> in;
        if (nodes_[i].inputs.empty()) in.push_back(input_shape_);
        for (int id : nodes_[i].inputs) {
            size_t p = index_.at(id);
            in.push_back(shapes[p]);
            producers_[i].push_back(p);
            consumers_[p].push_back(i);
        }
        shapes[i] = infer_shape(nodes_[i], in);
        nodes_[i].out_shape = shapes[i];
    }
}

size_t NetworkGraph::index_of(int id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw ParseError("no node with id " + std::to_string(id));
    return it->second;
}

LayerStats layer_stats(const NetworkGraph& graph, int id, uint32_t cell_bits) {
    const auto& n = graph.node(id);
    if (!is_crossbar_kind(n.kind))
        throw NotMappable("node " + std::to_string(id) + " (" + std::string(to_string(n.kind)) + ") is not crossbar-mappable");
    LayerStats s;
    const uint64_t cells_per_weight = (n.weight_bits + cell_bits - 1) / cell_bits;
    if (n.kind == LayerKind::Conv) {
        s.rows = uint64_t{n.cin} * n.kh * n.kw;
        s.mvm_invocations_per_sample = uint64_t{n.out_shape.height} * n.out_shape.width;
    } else {
        s.rows = n.cin;
        s.mvm_invocations_per_sample = 1;
    }
    s.cols_cells = uint64_t{n.cout} * cells_per_weight;
    s.weight_bits = s.rows * n.cout * n.weight_bits;
    return s;
}

WeightFootprint weight_footprint(const NetworkGraph& graph) {
    WeightFootprint fp;
    for (const auto& n : graph.nodes()) {
        if (!is_crossbar_kind(n.kind)) continue;
        const double mib = static_cast<double>(layer_stats(graph, n.id).weight_bits) / 8.0 / (1 << 20);
        (n.kind == LayerKind::Conv ? fp.conv_mib : fp.linear_mib) += mib;
    }
    return fp;
}

// ---------------------------------------------------------------------------
// JSON format

NetworkGraph parse_network(std::string_view text) {
    using nlohmann::json;
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("network json: ") + e.what());
    }
    try {
        if (!doc.contains("format_version") || doc.at("format_version").get<int>() != kNetworkFormatVersion)
            throw ParseError("network json: missing or unsupported format_version");
        auto in = doc.at("input_shape").get<std::vector<uint32_t>>();
        if (in.size() != 3) throw ParseError("input_shape must be [channels, height, width]");
        std::vector<LayerNode> nodes;
        for (const auto& j : doc.at("nodes")) {
            LayerNode n;
            n.id = j.at("id").get<int>();
            n.name = j.value("name", std::string{});
            auto kind = parse_layer_kind(j.at("kind").get<std::string>());
            if (!kind) throw ParseError("node " + std::to_string(n.id) + ": unknown kind");
            n.kind = *kind;
            n.inputs = j.value("inputs", std::vector<int>{});
            n.weight_bits = j.value("weight_bits", 4u);
            n.stride = j.value("stride", 1u);
            n.padding = j.value("padding", 0u);
            if (n.kind == LayerKind::Conv || n.kind == LayerKind::Linear) {
                n.cin = j.at("cin").get<uint32_t>();
                n.cout = j.at("cout").get<uint32_t>();
                if (n.kind == LayerKind::Conv) {
                    n.kh = j.at("kh").get<uint32_t>();
                    n.kw = j.at("kw").get<uint32_t>();
                }
                if (n.weight_bits == 0) throw ParseError("node " + std::to_string(n.id) + ": weight_bits must be >= 1");
            } else if (n.kind == LayerKind::Pool) {
                auto mode = j.value("mode", std::string("max"));
                if (mode == "max") n.pool_mode = PoolMode::Max;
                else if (mode == "avg") n.pool_mode = PoolMode::Avg;
                else if (mode == "global_avg") n.pool_mode = PoolMode::GlobalAvg;
                else throw ParseError("node " + std::to_string(n.id) + ": unknown pool mode '" + mode + "'");
                if (n.pool_mode != PoolMode::GlobalAvg) n.window = j.at("window").get<uint32_t>();
                n.ceil_mode = j.value("ceil_mode", false);
            }
            nodes.push_back(std::move(n));
        }
        return NetworkGraph(doc.value("name", std::string("network")), Shape{in[0], in[1], in[2]}, std::move(nodes));
    } catch (const json::exception& e) {
        throw ParseError(std::string("network json: ") + e.what());
    }
}

NetworkGraph load_network(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open network file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_network(ss.str());
}

std::string serialize_network(const NetworkGraph& graph) {
    using nlohmann::ordered_json;
    ordered_json doc;
    doc["format_version"] = kNetworkFormatVersion;
    doc["name"] = graph.name();
    const auto& s = graph.input_shape();
    doc["input_shape"] = {s.channels, s.height, s.width};
    auto& nodes = doc["nodes"] = ordered_json::array();
    for (const auto& n : graph.nodes()) {
        ordered_json j;
        j["id"] = n.id;
        j["name"] = n.name;
        j["kind"] = to_string(n.kind);
        j["inputs"] = n.inputs;
        switch (n.kind) {
        case LayerKind::Conv:
            j["cin"] = n.cin;
            j["cout"] = n.cout;
            j["kh"] = n.kh;
            j["kw"] = n.kw;
            j["stride"] = n.stride;
            j["padding"] = n.padding;
            j["weight_bits"] = n.weight_bits;
            break;
        case LayerKind::Linear:
            j["cin"] = n.cin;
            j["cout"] = n.cout;
            j["weight_bits"] = n.weight_bits;
            break;
        case LayerKind::Pool:
            j["mode"] = to_string(n.pool_mode);
            if (n.pool_mode != PoolMode::GlobalAvg) {
                j["window"] = n.window;
                j["stride"] = n.stride;
                j["padding"] = n.padding;
                j["ceil_mode"] = n.ceil_mode;
            }
            break;
        default:
            break;
        }
        nodes.push_back(std::move(j));
    }
    return doc.dump(1) + "\n";
}

// ---------------------------------------------------------------------------
// Benchmark builders

namespace {

class Builder {
public:
    int conv(int in, uint32_t cin, uint32_t cout, uint32_t k, uint32_t stride, uint32_t pad, const std::string& name) {
        LayerNode n = make(LayerKind::Conv, in, name);
        n.cin = cin;
        n.cout = cout;
        n.kh = n.kw = k;
        n.stride = stride;
        n.padding = pad;
        return push(std::move(n));
    }
    int linear(int in, uint32_t cin, uint32_t cout, const std::string& name) {
        LayerNode n = make(LayerKind::Linear, in, name);
        n.cin = cin;
        n.cout = cout;
        return push(std::move(n));
    }
    int pool(int in, PoolMode mode, uint32_t window, uint32_t stride, uint32_t pad, bool ceil, const std::string& name) {
        LayerNode n = make(LayerKind::Pool, in, name);
        n.pool_mode = mode;
        n.window = window;
        n.stride = stride;
        n.padding = pad;
        n.ceil_mode = ceil;
        return push(std::move(n));
    }
    int unary(LayerKind kind, int in, const std::string& name) { return push(make(kind, in, name)); }
    int join(LayerKind kind, std::vector<int> ins, const std::string& name) {
        LayerNode n = make(kind, -1, name);
        n.inputs = std::move(ins);
        return push(std::move(n));
    }

    NetworkGraph finish(std::string name) { return NetworkGraph(std::move(name), Shape{3, 224, 224}, std::move(nodes_)); }

private:
    LayerNode make(LayerKind kind, int in, const std::string& name) {
        LayerNode n;
        n.id = static_cast<int>(nodes_.size());
        n.kind = kind;
        n.name = name;
        if (in >= 0) n.inputs.push_back(in);
        return n;
    }
    int push(LayerNode n) {
        nodes_.push_back(std::move(n));
        return nodes_.back().id;
    }

    std::vector<LayerNode> nodes_;
};

NetworkGraph build_vgg16() {
    Builder b;
    const int cfg[] = {64, 64, 0, 128, 128, 0, 256, 256, 256, 0, 512, 512, 512, 0, 512, 512, 512, 0};
    int x = -1;
    uint32_t ch = 3;
    int conv_i = 0, pool_i = 0;
    for (int c : cfg) {
        if (c == 0) {
            x = b.pool(x, PoolMode::Max, 2, 2, 0, false, "pool" + std::to_string(++pool_i));
            continue;
        }
        const std::string tag = std::to_string(++conv_i);
        x = b.conv(x, ch, static_cast<uint32_t>(c), 3, 1, 1, "conv" + tag);
        x = b.unary(LayerKind::Activation, x, "relu" + tag);
        ch = static_cast<uint32_t>(c);
    }
    x = b.unary(LayerKind::Flatten, x, "flatten");
    x = b.linear(x, 512 * 7 * 7, 4096, "fc1");
    x = b.unary(LayerKind::Activation, x, "fc1_relu");
    x = b.linear(x, 4096, 4096, "fc2");
    x = b.unary(LayerKind::Activation, x, "fc2_relu");
    b.linear(x, 4096, 1000, "fc3");
    return b.finish("vgg16");
}

NetworkGraph build_resnet18() {
    Builder b;
    int x = b.conv(-1, 3, 64, 7, 2, 3, "conv1");
    x = b.unary(LayerKind::BatchNorm, x, "bn1");
    x = b.unary(LayerKind::Activation, x, "relu1");
    x = b.pool(x, PoolMode::Max, 3, 2, 1, false, "maxpool");
    uint32_t ch = 64;
    const uint32_t widths[] = {64, 128, 256, 512};
    for (int stage = 0; stage < 4; ++stage) {
        for (int blk = 0; blk < 2; ++blk) {
            const uint32_t out = widths[stage];
            const uint32_t stride = (stage > 0 && blk == 0) ? 2 : 1;
            const std::string p = "layer" + std::to_string(stage + 1) + "." + std::to_string(blk) + ".";
            int y = b.conv(x, ch, out, 3, stride, 1, p + "conv1");
            y = b.unary(LayerKind::BatchNorm, y, p + "bn1");
            y = b.unary(LayerKind::Activation, y, p + "relu1");
            y = b.conv(y, out, out, 3, 1, 1, p + "conv2");
            y = b.unary(LayerKind::BatchNorm, y, p + "bn2");
            int skip = x;
            if (stride != 1 || ch != out) {
                skip = b.conv(x, ch, out, 1, stride, 0, p + "downsample");
                skip = b.unary(LayerKind::BatchNorm, skip, p + "downsample_bn");
            }
            x = b.join(LayerKind::ElementwiseAdd, {y, skip}, p + "add");
            x = b.unary(LayerKind::Activation, x, p + "relu2");
            ch = out;
        }
    }
    x = b.pool(x, PoolMode::GlobalAvg, 0, 1, 0, false, "avgpool");
    x = b.unary(LayerKind::Flatten, x, "flatten");
    b.linear(x, 512, 1000, "fc");
    return b.finish("resnet18");
}

NetworkGraph build_squeezenet() {
    Builder b;
    int x = b.conv(-1, 3, 64, 3, 2, 0, "conv1");
    x = b.unary(LayerKind::Activation, x, "relu1");
    x = b.pool(x, PoolMode::Max, 3, 2, 0, true, "pool1");
    uint32_t ch = 64;
    int fire_i = 1;
    auto fire = [&](uint32_t squeeze, uint32_t expand) {
        const std::string p = "fire" + std::to_string(++fire_i) + ".";
        int s = b.conv(x, ch, squeeze, 1, 1, 0, p + "squeeze");
        s = b.unary(LayerKind::Activation, s, p + "squeeze_relu");
        int e1 = b.conv(s, squeeze, expand, 1, 1, 0, p + "expand1x1");
        e1 = b.unary(LayerKind::Activation, e1, p + "expand1x1_relu");
        int e3 = b.conv(s, squeeze, expand, 3, 1, 1, p + "expand3x3");
        e3 = b.unary(LayerKind::Activation, e3, p + "expand3x3_relu");
        x = b.join(LayerKind::Concat, {e1, e3}, p + "concat");
        ch = 2 * expand;
    };
    fire(16, 64);
    fire(16, 64);
    x = b.pool(x, PoolMode::Max, 3, 2, 0, true, "pool2");
    fire(32, 128);
    fire(32, 128);
    x = b.pool(x, PoolMode::Max, 3, 2, 0, true, "pool3");
    fire(48, 192);
    fire(48, 192);
    fire(64, 256);
    fire(64, 256);
    x = b.conv(x, ch, 1000, 1, 1, 0, "classifier");
    x = b.unary(LayerKind::Activation, x, "classifier_relu");
    x = b.pool(x, PoolMode::GlobalAvg, 0, 1, 0, false, "avgpool");
    b.unary(LayerKind::Flatten, x, "flatten");
    return b.finish("squeezenet");
}

}  // namespace

const std::vector<std::string>& benchmark_names() {
    static const std::vector<std::string> names = {"vgg16", "resnet18", "squeezenet"};
    return names;
}

NetworkGraph build_benchmark(std::string_view name) {
    if (name == "vgg16") return build_vgg16();
    if (name == "resnet18") return build_resnet18();
    if (name == "squeezenet") return build_squeezenet();
    throw UnknownModel("unknown model '" + std::string(name) + "' (expected vgg16, resnet18 or squeezenet)");
}

NetworkGraph resolve_network(const std::string& name_or_path) {
    for (const auto& n : benchmark_names())
        if (n == name_or_path) return build_benchmark(n);
    if (std::filesystem::exists(name_or_path)) return load_network(name_or_path);
    throw UnknownModel("unknown model '" + name_or_path + "' (expected a builtin name or a network file)");
}

}  // namespace compass
