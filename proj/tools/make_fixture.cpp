// Writes the 16x16x3 fixture classifier and its clean image.
//
//   make_fixture <output_dir>
//
// The network is a fixed-seed two-layer MLP: three channel-mean units, a bank
// of ReLU units with heavy-tailed random projections, detector units that
// ignore small changes of one input and respond to larger ones with
// diminishing slope, and a softmax over ten labels. Output biases are solved so the clean image is a
// confident "frog".

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <random>
#include <string>

#include "evoae/image.hpp"
#include "evoae/mlp.hpp"

namespace {

constexpr int kSize = 16;
constexpr int kChannels = 3;
constexpr std::uint32_t kProjections = 45;
constexpr double kProjectionScale = 0.3;
constexpr std::uint32_t kDetectors = 768;
constexpr double kDetectorSlope = 2.0;
constexpr double kDefendScale = 0.7;
// Detector response: flat up to the first breakpoint (intensity levels), then
// kDetectorSlope times the matching ratio until the next one.
constexpr std::array<double, 2> kKnees = {5.0, 25.0};
constexpr std::array<double, 2> kSlopeRatios = {1.0, 0.1};
constexpr double kOutputScale = 1.0;
constexpr double kChannelWeight = 40.0;
constexpr double kCleanConfidence = 0.9928;
constexpr std::size_t kFrog = 6;

evoae::Image fixture_image(std::mt19937_64& rng) {
    std::normal_distribution<double> noise(0.0, 12.0);
    evoae::Image img(kSize, kSize, kChannels);
    for (int y = 0; y < kSize; ++y) {
        for (int x = 0; x < kSize; ++x) {
            const double dx = (x - 7.5) / 6.0, dy = (y - 8.5) / 4.5;
            const bool body = dx * dx + dy * dy < 1.0;
            const double base[3] = {body ? 70.0 : 135.0, body ? 150.0 : 110.0, body ? 60.0 : 80.0};
            for (int c = 0; c < kChannels; ++c)
                img.at(x, y, c) = std::clamp(std::nearbyint(base[c] + noise(rng)), 20.0, 235.0);
        }
    }
    return img;
}

} // namespace

int main(int argc, char** argv) {
    if (argc != 2) {
        std::fprintf(stderr, "usage: make_fixture <output_dir>\n");
        return 2;
    }
    const std::filesystem::path out = argv[1];
    std::filesystem::create_directories(out);

    std::mt19937_64 rng(20240611);
    const evoae::Image clean = fixture_image(rng);

    evoae::MlpModel model;
    model.input = {kSize, kSize, kChannels};
    model.labels = {"airplane", "automobile", "bird", "cat", "deer", "dog", "frog", "horse", "ship", "truck"};
    const std::uint32_t n_in = kSize * kSize * kChannels;
    const std::uint32_t n_detector_begin = kChannels + kProjections;
    const std::uint32_t n_hidden = n_detector_begin + 2 * kKnees.size() * kDetectors;
    const std::uint32_t n_out = static_cast<std::uint32_t>(model.labels.size());

    std::vector<double> x(n_in);
    for (std::size_t i = 0; i < n_in; ++i) x[i] = clean.data[i] / 255.0;

    evoae::DenseLayer hidden{n_hidden, n_in, evoae::Activation::relu, std::vector<float>(n_hidden * n_in, 0.0f),
                             std::vector<float>(n_hidden, 0.0f)};
    for (int c = 0; c < kChannels; ++c)
        for (std::uint32_t p = 0; p < kSize * kSize; ++p)
            hidden.weights[c * n_in + p * kChannels + c] = 1.0f / (kSize * kSize);

    std::normal_distribution<double> gauss(0.0, 1.0);
    std::student_t_distribution<double> heavy(2.0);
    std::uniform_real_distribution<double> active(0.1, 1.0);
    for (std::uint32_t h = kChannels; h < n_detector_begin; ++h) {
        double pre = 0.0;
        for (std::uint32_t i = 0; i < n_in; ++i) {
            const float w = static_cast<float>(heavy(rng) * kProjectionScale / std::sqrt(double(n_in)));
            hidden.weights[h * n_in + i] = w;
            pre += double(w) * x[i];
        }
        hidden.bias[h] = static_cast<float>(active(rng) - pre);
    }

    // Per detector input and direction one unit per breakpoint:
    // ReLU(+-(x - clean) - knee).
    std::vector<std::uint32_t> inputs(n_in);
    std::iota(inputs.begin(), inputs.end(), 0u);
    std::shuffle(inputs.begin(), inputs.end(), rng);
    const std::uint32_t per_detector = 2 * kKnees.size();
    for (std::uint32_t k = 0; k < kDetectors; ++k) {
        const std::uint32_t i = inputs[k];
        for (std::uint32_t j = 0; j < per_detector; ++j) {
            const std::uint32_t h = n_detector_begin + per_detector * k + j;
            const double sign = j < kKnees.size() ? 1.0 : -1.0;
            hidden.weights[h * n_in + i] = static_cast<float>(sign);
            hidden.bias[h] = static_cast<float>(-sign * x[i] - kKnees[j % kKnees.size()] / 255.0);
        }
    }

    evoae::DenseLayer output{n_out, n_hidden, evoae::Activation::none, std::vector<float>(n_out * n_hidden, 0.0f),
                             std::vector<float>(n_out, 0.0f)};
    for (std::uint32_t o = 0; o < n_out; ++o) {
        for (int c = 0; c < kChannels; ++c)
            output.weights[o * n_hidden + c] = static_cast<float>(gauss(rng) * kChannelWeight * 0.25);
        for (std::uint32_t h = kChannels; h < n_detector_begin; ++h)
            output.weights[o * n_hidden + h] = static_cast<float>(gauss(rng) * kOutputScale);
    }
    // One direction of each detector input pushes towards another label, the
    // opposite one towards frog, so unstructured noise cancels on average.
    std::array<double, kKnees.size()> increments{};
    for (std::size_t j = 0; j < kKnees.size(); ++j)
        increments[j] = kDetectorSlope * (kSlopeRatios[j] - (j == 0 ? 0.0 : kSlopeRatios[j - 1]));
    std::uniform_int_distribution<std::uint32_t> other(0, n_out - 2);
    std::bernoulli_distribution coin(0.5);
    for (std::uint32_t k = 0; k < kDetectors; ++k) {
        std::uint32_t o = other(rng);
        if (o >= kFrog) ++o;
        const std::uint32_t base = n_detector_begin + per_detector * k;
        const std::uint32_t attack = base + (coin(rng) ? 0 : kKnees.size());
        const std::uint32_t defend = attack == base ? base + kKnees.size() : base;
        for (std::size_t j = 0; j < kKnees.size(); ++j) {
            output.weights[o * n_hidden + attack + j] = static_cast<float>(increments[j]);
            output.weights[kFrog * n_hidden + attack + j] = static_cast<float>(-increments[j]);
            output.weights[kFrog * n_hidden + defend + j] = static_cast<float>(kDefendScale * increments[j]);
        }
    }
    // The frog logit rises with green and falls with red and blue.
    output.weights[kFrog * n_hidden + 0] = static_cast<float>(-kChannelWeight);
    output.weights[kFrog * n_hidden + 1] = static_cast<float>(kChannelWeight);
    output.weights[kFrog * n_hidden + 2] = static_cast<float>(-kChannelWeight * 0.5);

    model.layers = {hidden, output};
    // Solve output biases: others get small random logits, frog gets the
    // logit that yields kCleanConfidence.
    model.layers[1].bias.assign(n_out, 0.0f);
    std::vector<double> h0(n_hidden);
    for (std::uint32_t h = 0; h < n_hidden; ++h) {
        double s = hidden.bias[h];
        for (std::uint32_t i = 0; i < n_in; ++i) s += double(hidden.weights[h * n_in + i]) * x[i];
        h0[h] = std::max(0.0, s);
    }
    std::vector<double> target(n_out);
    double others = 0.0;
    for (std::uint32_t o = 0; o < n_out; ++o) {
        if (o == kFrog) continue;
        target[o] = 0.5 * gauss(rng);
        others += std::exp(target[o]);
    }
    target[kFrog] = std::log(kCleanConfidence / (1.0 - kCleanConfidence) * others);
    for (std::uint32_t o = 0; o < n_out; ++o) {
        double z = 0.0;
        for (std::uint32_t h = 0; h < n_hidden; ++h) z += double(model.layers[1].weights[o * n_hidden + h]) * h0[h];
        model.layers[1].bias[o] = static_cast<float>(target[o] - z);
    }

    model.validate();
    model.save(out / "fixture.aemlp");
    evoae::write_image(clean, out / "frog.ppm");

    const auto probs = model.probabilities(x);
    std::printf("clean frog confidence %.4f\n", probs[kFrog]);
    return 0;
}
