#pragma once

#include <nlohmann/json.hpp>

#include "evoae/image.hpp"
#include "evoae/oracle.hpp"

// JSON shapes of the classification wire protocol:
//   POST /v1/classify        {"image": IMAGE}            -> RESULT
//   POST /v1/classify_batch  {"images": [IMAGE, ...]}    -> {"results": [RESULT, ...]}
//   GET  /v1/info            -> {"model_id", "input": {"width","height","channels"}, "batch": bool}
// IMAGE  = {"width", "height", "channels", "data": [row-major reals in 0..255]}
// RESULT = {"model_id": str, "classes": [{"label": str, "confidence": real}, ...]}
namespace evoae::wire {

nlohmann::json to_json(const Image& image);
Image image_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ClassificationResult& result);
/// Parses and validates; throws OracleMalformedResponse.
ClassificationResult result_from_json(const nlohmann::json& j);

struct Info {
    std::string model_id;
    InputSpec input;
    bool batch = false;
};
nlohmann::json to_json(const Info& info);
Info info_from_json(const nlohmann::json& j);

} // namespace evoae::wire
