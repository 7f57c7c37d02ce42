#pragma once

#include "mocnn/encoding.hpp"

#include <cstdint>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace mocnn {

enum class LayerKind {
    InitialConv,
    DenseLayer,
    TransitionConv,
    TransitionPool,
    GlobalPool,
    Classifier,
};

std::string_view layerKindName(LayerKind kind);

/// One stage of an expanded DenseNet.
///
/// For convolutions `kernel` is the filter size; for pooling it is the window.
/// The classifier uses inChannels as its feature count and outChannels as
/// the class count. `bottleneckChannels` is non-zero only for dense layers
/// built with the optional 1x1 bottleneck.
struct LayerSpec {
    LayerKind kind = LayerKind::DenseLayer;
    int inChannels = 0;
    int outChannels = 0;
    int kernel = 0;
    int stride = 1;
    int inHeight = 0;
    int inWidth = 0;
    int outHeight = 0;
    int outWidth = 0;
    int block = -1;
    int bottleneckChannels = 0;

    friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

struct ArchitectureSpec {
    std::vector<LayerSpec> layers;

    std::size_t count(LayerKind kind) const;
};

struct DenseNetOptions {
    /// BN-ReLU-1x1conv(width * growth) before each 3x3 convolution.
    bool bottleneck = false;
    int bottleneckWidth = 4;
};

class InfeasibleArchitecture : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Builds InitialConv -> block_1 -> transition -> ... -> block_B -> GlobalPool -> Classifier.
///
/// The stem is a 3x3 stride-1 convolution producing twice the first block's
/// growth rate. Dense layers are BN-ReLU-3x3conv with size-preserving padding,
/// each adding `growth` channels to the concatenation. Transitions are a 1x1
/// convolution that keeps the channel count followed by 2x2 average pooling.
/// Throws InfeasibleArchitecture if pooling empties the feature map before the
/// last block.
ArchitectureSpec expand(const DecodedGenotype& d, const SearchSpace& space, const DenseNetOptions& options = {});

struct LayerFlops {
    std::size_t layerIndex = 0;
    std::uint64_t flops = 0;
};

struct FlopsBreakdown {
    std::vector<LayerFlops> perLayer;
    std::uint64_t total = 0;
    std::uint64_t params = 0;
};

/// Forward-pass operation count, multiply-adds counted as two operations.
///
/// convolution: 2 * kh * kw * Cin * Cout * Hout * Wout
/// classifier:  2 * inFeatures * numClasses
/// Batch norm, ReLU and pooling are not counted.
FlopsBreakdown flops(const ArchitectureSpec& a);

/// Convolution weights (no bias) plus classifier weights and biases.
std::uint64_t paramCount(const ArchitectureSpec& a);

} // namespace mocnn
