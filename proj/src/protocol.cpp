#include "mocnn/protocol.hpp"

#include <algorithm>
#include <array>

namespace mocnn::protocol {

namespace {

const std::array<std::string_view, 5> kTypes{"PING", "PONG", "EVALUATE", "RESULT", "ERROR"};

Json rangesToJson(const std::vector<IntRange>& ranges)
{
    auto arr = Json::array();
    for (const auto& r : ranges) {
        arr.push_back({r.min, r.max});
    }
    return arr;
}

std::vector<IntRange> rangesFromJson(const Json& j, const char* field)
{
    if (!j.is_array()) {
        throw MalformedFrame(std::string("space.") + field + " must be an array");
    }
    std::vector<IntRange> out;
    for (const auto& r : j) {
        if (!r.is_array() || r.size() != 2 || !r[0].is_number_integer() || !r[1].is_number_integer()) {
            throw MalformedFrame(std::string("space.") + field + " entries must be [min, max] integer pairs");
        }
        out.push_back({r[0].get<int>(), r[1].get<int>()});
    }
    return out;
}

int intField(const Json& j, const char* field)
{
    if (!j.contains(field) || !j[field].is_number_integer()) {
        throw MalformedFrame(std::string("space.") + field + " must be an integer");
    }
    return j[field].get<int>();
}

} // namespace

std::string encodeFrame(const Json& message)
{
    const auto payload = message.dump();
    if (payload.size() > kMaxFrameBytes) {
        throw MalformedFrame("message of " + std::to_string(payload.size()) + " bytes exceeds the frame cap");
    }
    const auto n = static_cast<std::uint32_t>(payload.size());
    std::string frame;
    frame.reserve(kHeaderBytes + payload.size());
    frame.push_back(static_cast<char>((n >> 24) & 0xff));
    frame.push_back(static_cast<char>((n >> 16) & 0xff));
    frame.push_back(static_cast<char>((n >> 8) & 0xff));
    frame.push_back(static_cast<char>(n & 0xff));
    frame += payload;
    return frame;
}

std::uint32_t decodeLength(std::string_view header)
{
    if (header.size() != kHeaderBytes) {
        throw MalformedFrame("frame header must be 4 bytes");
    }
    std::uint32_t n = 0;
    for (char c : header) {
        n = (n << 8) | static_cast<std::uint8_t>(c);
    }
    return n;
}

Json decodePayload(std::string_view payload)
{
    Json j = Json::parse(payload, nullptr, false);
    if (j.is_discarded()) {
        throw MalformedFrame("payload is not valid JSON");
    }
    if (!j.is_object() || !j.contains("type") || !j["type"].is_string()) {
        throw MalformedFrame("payload must be an object with a string \"type\"");
    }
    const auto type = j["type"].get<std::string>();
    if (std::find(kTypes.begin(), kTypes.end(), type) == kTypes.end()) {
        throw MalformedFrame("unknown message type \"" + type + "\"");
    }
    return j;
}

Json ping()
{
    return {{"type", "PING"}};
}

Json pong()
{
    return {{"type", "PONG"}};
}

Json evaluateRequest(std::uint64_t jobId, const std::vector<int>& genotype, const SearchSpace& space)
{
    return {{"type", "EVALUATE"}, {"jobId", jobId}, {"genotype", genotype}, {"space", spaceToJson(space)}};
}

Json result(std::uint64_t jobId, double accuracy, int bestEpoch)
{
    return {{"type", "RESULT"}, {"jobId", jobId}, {"accuracy", accuracy}, {"bestEpoch", bestEpoch}};
}

Json error(std::optional<std::uint64_t> jobId, std::string_view message)
{
    Json j{{"type", "ERROR"}, {"message", message}};
    j["jobId"] = jobId ? Json(*jobId) : Json(nullptr);
    return j;
}

Json spaceToJson(const SearchSpace& space)
{
    return {{"numBlocks", space.numBlocks()},
            {"layerRange", rangesToJson(space.layerRange)},
            {"growthRange", rangesToJson(space.growthRange)},
            {"inputHeight", space.inputHeight},
            {"inputWidth", space.inputWidth},
            {"inputChannels", space.inputChannels},
            {"numClasses", space.numClasses}};
}

SearchSpace spaceFromJson(const Json& j)
{
    if (!j.is_object()) {
        throw MalformedFrame("space must be an object");
    }
    SearchSpace s;
    s.layerRange = rangesFromJson(j.value("layerRange", Json()), "layerRange");
    s.growthRange = rangesFromJson(j.value("growthRange", Json()), "growthRange");
    s.inputHeight = intField(j, "inputHeight");
    s.inputWidth = intField(j, "inputWidth");
    s.inputChannels = intField(j, "inputChannels");
    s.numClasses = intField(j, "numClasses");
    if (j.contains("numBlocks") && j["numBlocks"] != s.numBlocks()) {
        throw MalformedFrame("space.numBlocks disagrees with the range lists");
    }
    try {
        s.validate();
    } catch (const std::invalid_argument& e) {
        throw MalformedFrame(std::string("invalid space: ") + e.what());
    }
    return s;
}

std::string typeOf(const Json& message)
{
    if (!message.is_object() || !message.contains("type") || !message["type"].is_string()) {
        return {};
    }
    return message["type"].get<std::string>();
}

} // namespace mocnn::protocol
