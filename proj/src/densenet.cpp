#include "mocnn/densenet.hpp"

#include <algorithm>
#include <string>

namespace mocnn {

namespace {

std::uint64_t convFlops(std::uint64_t k, std::uint64_t cin, std::uint64_t cout, std::uint64_t h, std::uint64_t w)
{
    return 2 * k * k * cin * cout * h * w;
}

std::uint64_t convParams(std::uint64_t k, std::uint64_t cin, std::uint64_t cout)
{
    return k * k * cin * cout;
}

} // namespace

std::string_view layerKindName(LayerKind kind)
{
    switch (kind) {
    case LayerKind::InitialConv: return "initial_conv";
    case LayerKind::DenseLayer: return "dense_layer";
    case LayerKind::TransitionConv: return "transition_conv";
    case LayerKind::TransitionPool: return "transition_pool";
    case LayerKind::GlobalPool: return "global_pool";
    case LayerKind::Classifier: return "classifier";
    }
    return "unknown";
}

std::size_t ArchitectureSpec::count(LayerKind kind) const
{
    return static_cast<std::size_t>(
        std::count_if(layers.begin(), layers.end(), [kind](const LayerSpec& l) { return l.kind == kind; }));
}

ArchitectureSpec expand(const DecodedGenotype& d, const SearchSpace& space, const DenseNetOptions& options)
{
    validate(d, space);

    ArchitectureSpec arch;
    int h = space.inputHeight;
    int w = space.inputWidth;

    LayerSpec stem;
    stem.kind = LayerKind::InitialConv;
    stem.inChannels = space.inputChannels;
    stem.outChannels = 2 * d.blocks.front().growth;
    stem.kernel = 3;
    stem.inHeight = stem.outHeight = h;
    stem.inWidth = stem.outWidth = w;
    arch.layers.push_back(stem);

    int channels = stem.outChannels;
    for (std::size_t b = 0; b < d.blocks.size(); ++b) {
        const auto& shape = d.blocks[b];
        for (int l = 0; l < shape.layers; ++l) {
            LayerSpec dense;
            dense.kind = LayerKind::DenseLayer;
            dense.inChannels = channels;
            dense.outChannels = shape.growth;
            dense.kernel = 3;
            dense.inHeight = dense.outHeight = h;
            dense.inWidth = dense.outWidth = w;
            dense.block = static_cast<int>(b);
            if (options.bottleneck) {
                dense.bottleneckChannels = options.bottleneckWidth * shape.growth;
            }
            arch.layers.push_back(dense);
            channels += shape.growth;
        }

        if (b + 1 == d.blocks.size()) {
            break;
        }

        LayerSpec conv;
        conv.kind = LayerKind::TransitionConv;
        conv.inChannels = conv.outChannels = channels;
        conv.kernel = 1;
        conv.inHeight = conv.outHeight = h;
        conv.inWidth = conv.outWidth = w;
        conv.block = static_cast<int>(b);
        arch.layers.push_back(conv);

        LayerSpec pool;
        pool.kind = LayerKind::TransitionPool;
        pool.inChannels = pool.outChannels = channels;
        pool.kernel = 2;
        pool.stride = 2;
        pool.inHeight = h;
        pool.inWidth = w;
        pool.outHeight = h / 2;
        pool.outWidth = w / 2;
        pool.block = static_cast<int>(b);
        arch.layers.push_back(pool);

        h /= 2;
        w /= 2;
        if (h == 0 || w == 0) {
            throw InfeasibleArchitecture("feature map vanishes after transition " + std::to_string(b + 1) + " of "
                                         + std::to_string(d.blocks.size() - 1) + " (input "
                                         + std::to_string(space.inputHeight) + "x"
                                         + std::to_string(space.inputWidth) + ")");
        }
    }

    LayerSpec gap;
    gap.kind = LayerKind::GlobalPool;
    gap.inChannels = gap.outChannels = channels;
    gap.kernel = h;
    gap.inHeight = h;
    gap.inWidth = w;
    gap.outHeight = gap.outWidth = 1;
    arch.layers.push_back(gap);

    LayerSpec fc;
    fc.kind = LayerKind::Classifier;
    fc.inChannels = channels;
    fc.outChannels = space.numClasses;
    fc.inHeight = fc.inWidth = fc.outHeight = fc.outWidth = 1;
    arch.layers.push_back(fc);

    return arch;
}

FlopsBreakdown flops(const ArchitectureSpec& a)
{
    FlopsBreakdown out;
    out.perLayer.reserve(a.layers.size());
    for (std::size_t i = 0; i < a.layers.size(); ++i) {
        const auto& l = a.layers[i];
        std::uint64_t f = 0;
        switch (l.kind) {
        case LayerKind::InitialConv:
        case LayerKind::TransitionConv:
            f = convFlops(l.kernel, l.inChannels, l.outChannels, l.outHeight, l.outWidth);
            break;
        case LayerKind::DenseLayer:
            if (l.bottleneckChannels > 0) {
                f = convFlops(1, l.inChannels, l.bottleneckChannels, l.outHeight, l.outWidth)
                    + convFlops(l.kernel, l.bottleneckChannels, l.outChannels, l.outHeight, l.outWidth);
            } else {
                f = convFlops(l.kernel, l.inChannels, l.outChannels, l.outHeight, l.outWidth);
            }
            break;
        case LayerKind::Classifier:
            f = 2 * static_cast<std::uint64_t>(l.inChannels) * static_cast<std::uint64_t>(l.outChannels);
            break;
        case LayerKind::TransitionPool:
        case LayerKind::GlobalPool:
            break;
        }
        out.perLayer.push_back({i, f});
        out.total += f;
    }
    out.params = paramCount(a);
    return out;
}

std::uint64_t paramCount(const ArchitectureSpec& a)
{
    std::uint64_t total = 0;
    for (const auto& l : a.layers) {
        switch (l.kind) {
        case LayerKind::InitialConv:
        case LayerKind::TransitionConv:
            total += convParams(l.kernel, l.inChannels, l.outChannels);
            break;
        case LayerKind::DenseLayer:
            if (l.bottleneckChannels > 0) {
                total += convParams(1, l.inChannels, l.bottleneckChannels)
                         + convParams(l.kernel, l.bottleneckChannels, l.outChannels);
            } else {
                total += convParams(l.kernel, l.inChannels, l.outChannels);
            }
            break;
        case LayerKind::Classifier:
            total += static_cast<std::uint64_t>(l.inChannels) * static_cast<std::uint64_t>(l.outChannels)
                     + static_cast<std::uint64_t>(l.outChannels);
            break;
        case LayerKind::TransitionPool:
        case LayerKind::GlobalPool:
            break;
        }
    }
    return total;
}

} // namespace mocnn
