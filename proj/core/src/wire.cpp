#include "evoae/wire.hpp"

#include <cmath>

#include "evoae/error.hpp"

namespace evoae::wire {

using nlohmann::json;

json to_json(const Image& image) {
    json data = json::array();
    auto& arr = data.get_ref<json::array_t&>();
    arr.reserve(image.size());
    for (double v : image.data) arr.emplace_back(v);
    return {{"width", image.width}, {"height", image.height}, {"channels", image.channels}, {"data", std::move(data)}};
}

Image image_from_json(const json& j) {
    try {
        Image img(j.at("width").get<int>(), j.at("height").get<int>(), j.at("channels").get<int>());
        const auto& data = j.at("data");
        if (!data.is_array() || data.size() != img.size()) throw FormatError("image data length does not match dims");
        for (std::size_t i = 0; i < img.size(); ++i) {
            const double v = data[i].get<double>();
            if (!std::isfinite(v) || v < 0.0 || v > 255.0) throw FormatError("image intensity outside 0..255");
            img.data[i] = v;
        }
        return img;
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed image object: ") + e.what());
    } catch (const ContractError& e) {
        throw FormatError(std::string("malformed image object: ") + e.what());
    }
}

json to_json(const ClassificationResult& result) {
    json classes = json::array();
    for (const auto& lc : result.ranked) classes.push_back({{"label", lc.label}, {"confidence", lc.confidence}});
    return {{"model_id", result.model_id}, {"classes", std::move(classes)}};
}

ClassificationResult result_from_json(const json& j) {
    ClassificationResult r;
    try {
        r.model_id = j.at("model_id").get<std::string>();
        const auto& classes = j.at("classes");
        if (!classes.is_array()) throw OracleMalformedResponse("'classes' is not an array");
        for (const auto& c : classes) {
            const auto& conf = c.at("confidence");
            if (!conf.is_number()) throw OracleMalformedResponse("confidence is not a number");
            r.ranked.push_back({c.at("label").get<std::string>(), conf.get<double>()});
        }
    } catch (const json::exception& e) {
        throw OracleMalformedResponse(std::string("malformed classification result: ") + e.what());
    }
    validate_result(r);
    return r;
}

json to_json(const Info& info) {
    return {{"model_id", info.model_id},
            {"input", {{"width", info.input.width}, {"height", info.input.height}, {"channels", info.input.channels}}},
            {"batch", info.batch}};
}

Info info_from_json(const json& j) {
    Info info;
    try {
        info.model_id = j.at("model_id").get<std::string>();
        const auto& in = j.at("input");
        info.input = {in.at("width").get<int>(), in.at("height").get<int>(), in.at("channels").get<int>()};
        info.batch = j.value("batch", false);
    } catch (const json::exception& e) {
        throw OracleMalformedResponse(std::string("malformed /v1/info response: ") + e.what());
    }
    if (info.input.width <= 0 || info.input.height <= 0 || (info.input.channels != 1 && info.input.channels != 3))
        throw OracleMalformedResponse("/v1/info advertises invalid input dims");
    return info;
}

} // namespace evoae::wire
