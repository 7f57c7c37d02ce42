#pragma once

#include "mocnn/encoding.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

// Framed request/response protocol between the proxy and evaluation workers.
//
// frame   := length:uint32 big-endian, payload:length bytes of UTF-8 JSON
// PING     {"type":"PING"}
// PONG     {"type":"PONG"}
// EVALUATE {"type":"EVALUATE","jobId":int,"genotype":[int,...],"space":{...}}
// RESULT   {"type":"RESULT","jobId":int,"accuracy":float,"bestEpoch":int}
// ERROR    {"type":"ERROR","jobId":int|null,"message":string}
//
// Workers only report accuracy; FLOPs are computed on the proxy side.
namespace mocnn::protocol {

using Json = nlohmann::json;

inline constexpr std::uint32_t kMaxFrameBytes = 16u * 1024u * 1024u;
inline constexpr std::size_t kHeaderBytes = 4;

/// Frame or payload that violates the protocol.
class MalformedFrame : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Connection-level failure: refused, reset, timed out, cancelled.
class TransportError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string encodeFrame(const Json& message);
std::uint32_t decodeLength(std::string_view header);

/// Parses a payload and checks it is an object with a known "type".
Json decodePayload(std::string_view payload);

Json ping();
Json pong();
Json evaluateRequest(std::uint64_t jobId, const std::vector<int>& genotype, const SearchSpace& space);
Json result(std::uint64_t jobId, double accuracy, int bestEpoch);
Json error(std::optional<std::uint64_t> jobId, std::string_view message);

Json spaceToJson(const SearchSpace& space);
SearchSpace spaceFromJson(const Json& j);

std::string typeOf(const Json& message);

} // namespace mocnn::protocol
