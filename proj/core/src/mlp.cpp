#include "evoae/mlp.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numeric>

#include "evoae/error.hpp"

namespace evoae {

static_assert(std::endian::native == std::endian::little, "weight files are read as little-endian");

namespace {

constexpr char kMagic[8] = {'A', 'E', 'M', 'L', 'P', '0', '1', '\0'};

class Reader {
public:
    Reader(std::string buf, std::string name) : buf_(std::move(buf)), name_(std::move(name)) {}

    template <typename T>
    T read(const std::string& what) {
        T v{};
        need(sizeof(T), what);
        std::memcpy(&v, buf_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }

    void read_floats(std::vector<float>& out, std::size_t n, const std::string& what) {
        need(n * sizeof(float), what);
        out.resize(n);
        std::memcpy(out.data(), buf_.data() + pos_, n * sizeof(float));
        pos_ += n * sizeof(float);
    }

    std::string read_string(std::size_t n, const std::string& what) {
        need(n, what);
        std::string s = buf_.substr(pos_, n);
        pos_ += n;
        return s;
    }

    bool at_end() const { return pos_ == buf_.size(); }

private:
    void need(std::size_t n, const std::string& what) {
        if (buf_.size() - pos_ < n) throw FormatError(name_ + ": truncated while reading " + what);
    }

    std::string buf_;
    std::string name_;
    std::size_t pos_ = 0;
};

template <typename T>
void put(std::ofstream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

} // namespace

MlpModel MlpModel::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError(path.string() + ": cannot open weight file");
    std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const std::string name = path.string();
    if (buf.size() < sizeof(kMagic) || std::memcmp(buf.data(), kMagic, sizeof(kMagic)) != 0)
        throw FormatError(name + ": bad magic (expected AEMLP01)");
    Reader r(buf.substr(sizeof(kMagic)), name);

    MlpModel m;
    m.input.width = static_cast<int>(r.read<std::uint32_t>("input width"));
    m.input.height = static_cast<int>(r.read<std::uint32_t>("input height"));
    m.input.channels = static_cast<int>(r.read<std::uint32_t>("channel count"));
    const auto label_count = r.read<std::uint32_t>("label count");
    if (label_count > (1u << 20)) throw FormatError(name + ": implausible label count");
    for (std::uint32_t i = 0; i < label_count; ++i) {
        const std::string what = "label " + std::to_string(i);
        const auto len = r.read<std::uint32_t>(what);
        m.labels.push_back(r.read_string(len, what));
    }
    const auto layer_count = r.read<std::uint32_t>("layer count");
    if (layer_count == 0 || layer_count > 1024) throw FormatError(name + ": implausible layer count");
    for (std::uint32_t l = 0; l < layer_count; ++l) {
        const std::string tag = "layer " + std::to_string(l);
        DenseLayer layer;
        layer.rows = r.read<std::uint32_t>(tag + " header");
        layer.cols = r.read<std::uint32_t>(tag + " header");
        const auto act = r.read<std::uint8_t>(tag + " header");
        if (act > 1) throw FormatError(name + ": " + tag + " has unknown activation code " + std::to_string(act));
        layer.activation = static_cast<Activation>(act);
        const auto count = static_cast<std::size_t>(layer.rows) * layer.cols;
        if (count > (std::size_t{1} << 30)) throw FormatError(name + ": " + tag + " is implausibly large");
        r.read_floats(layer.weights, count, tag + " weights");
        r.read_floats(layer.bias, layer.rows, tag + " biases");
        m.layers.push_back(std::move(layer));
    }
    if (!r.at_end()) throw FormatError(name + ": trailing bytes after the last layer");
    try {
        m.validate();
    } catch (const FormatError& e) {
        throw FormatError(name + ": " + e.what());
    }
    return m;
}

void MlpModel::save(const std::filesystem::path& path) const {
    validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError(path.string() + ": cannot open for writing");
    out.write(kMagic, sizeof(kMagic));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(input.width));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(input.height));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(input.channels));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(labels.size()));
    for (const auto& l : labels) {
        put<std::uint32_t>(out, static_cast<std::uint32_t>(l.size()));
        out.write(l.data(), static_cast<std::streamsize>(l.size()));
    }
    put<std::uint32_t>(out, static_cast<std::uint32_t>(layers.size()));
    for (const auto& layer : layers) {
        put<std::uint32_t>(out, layer.rows);
        put<std::uint32_t>(out, layer.cols);
        put<std::uint8_t>(out, static_cast<std::uint8_t>(layer.activation));
        out.write(reinterpret_cast<const char*>(layer.weights.data()),
                  static_cast<std::streamsize>(layer.weights.size() * sizeof(float)));
        out.write(reinterpret_cast<const char*>(layer.bias.data()),
                  static_cast<std::streamsize>(layer.bias.size() * sizeof(float)));
    }
    if (!out) throw FormatError(path.string() + ": write failed");
}

void MlpModel::validate() const {
    if (input.width <= 0 || input.height <= 0 || (input.channels != 1 && input.channels != 3))
        throw FormatError("invalid input dims in header");
    if (labels.empty()) throw FormatError("empty label table");
    if (layers.empty()) throw FormatError("no layers");
    std::size_t expected_in = input_size();
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const auto& layer = layers[l];
        const std::string tag = "layer " + std::to_string(l);
        if (layer.cols != expected_in)
            throw FormatError(tag + " expects " + std::to_string(layer.cols) + " inputs but receives " +
                              std::to_string(expected_in));
        if (layer.rows == 0) throw FormatError(tag + " has no outputs");
        if (layer.weights.size() != static_cast<std::size_t>(layer.rows) * layer.cols || layer.bias.size() != layer.rows)
            throw FormatError(tag + " has inconsistent parameter counts");
        for (float w : layer.weights)
            if (!std::isfinite(w)) throw FormatError(tag + " has a non-finite weight");
        for (float b : layer.bias)
            if (!std::isfinite(b)) throw FormatError(tag + " has a non-finite bias");
        expected_in = layer.rows;
    }
    if (expected_in != labels.size())
        throw FormatError("output layer has " + std::to_string(expected_in) + " units for " +
                          std::to_string(labels.size()) + " labels");
}

std::vector<double> MlpModel::probabilities(std::span<const double> input01) const {
    if (input01.size() != input_size()) throw ContractError("mlp: input size mismatch");
    std::vector<double> act(input01.begin(), input01.end());
    std::vector<double> next;
    for (const auto& layer : layers) {
        next.assign(layer.rows, 0.0);
        for (std::uint32_t r = 0; r < layer.rows; ++r) {
            const float* w = layer.weights.data() + static_cast<std::size_t>(r) * layer.cols;
            double acc = layer.bias[r];
            for (std::uint32_t c = 0; c < layer.cols; ++c) acc += static_cast<double>(w[c]) * act[c];
            next[r] = layer.activation == Activation::relu ? std::max(acc, 0.0) : acc;
        }
        act.swap(next);
    }
    const double mx = *std::max_element(act.begin(), act.end());
    double sum = 0.0;
    for (double& v : act) {
        v = std::exp(v - mx);
        sum += v;
    }
    for (double& v : act) v /= sum;
    return act;
}

MlpOracle::MlpOracle(MlpModel model, std::string model_id, bool caching)
    : Oracle(model.input, std::move(model_id), caching), model_(std::move(model)) {
    model_.validate();
    for (const auto& layer : model_.layers) {
        SparseLayer sp;
        sp.row_start.push_back(0);
        for (std::uint32_t r = 0; r < layer.rows; ++r) {
            for (std::uint32_t c = 0; c < layer.cols; ++c) {
                const float w = layer.weights[static_cast<std::size_t>(r) * layer.cols + c];
                if (w == 0.0f) continue;
                sp.cols.push_back(c);
                sp.weights.push_back(w);
            }
            sp.row_start.push_back(static_cast<std::uint32_t>(sp.cols.size()));
        }
        sparse_.push_back(std::move(sp));
    }
}

std::vector<double> MlpOracle::probabilities(std::span<const double> input01) const {
    if (input01.size() != model_.input_size()) throw ContractError("mlp: input size mismatch");
    std::vector<double> act(input01.begin(), input01.end());
    std::vector<double> next;
    for (std::size_t l = 0; l < model_.layers.size(); ++l) {
        const auto& layer = model_.layers[l];
        const auto& sp = sparse_[l];
        next.assign(layer.rows, 0.0);
        for (std::uint32_t r = 0; r < layer.rows; ++r) {
            double acc = layer.bias[r];
            for (std::uint32_t k = sp.row_start[r]; k < sp.row_start[r + 1]; ++k) acc += sp.weights[k] * act[sp.cols[k]];
            next[r] = layer.activation == Activation::relu ? std::max(acc, 0.0) : acc;
        }
        act.swap(next);
    }
    const double mx = *std::max_element(act.begin(), act.end());
    double sum = 0.0;
    for (double& v : act) {
        v = std::exp(v - mx);
        sum += v;
    }
    for (double& v : act) v /= sum;
    return act;
}

std::vector<ClassificationResult> MlpOracle::query(std::span<const std::vector<unsigned char>> batch) {
    std::vector<ClassificationResult> out;
    out.reserve(batch.size());
    std::vector<double> x(model_.input_size());
    for (const auto& bytes : batch) {
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = bytes[i] / 255.0;
        const auto probs = probabilities(x);
        std::vector<std::size_t> order(probs.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return probs[a] > probs[b]; });
        ClassificationResult res;
        res.model_id = model_id();
        for (auto k : order) res.ranked.push_back({model_.labels[k], probs[k]});
        out.push_back(std::move(res));
    }
    return out;
}

std::shared_ptr<MlpOracle> load_builtin(const std::filesystem::path& model_file, bool caching) {
    auto model = MlpModel::load(model_file);
    return std::make_shared<MlpOracle>(std::move(model), "builtin:" + model_file.stem().string(), caching);
}

} // namespace evoae
