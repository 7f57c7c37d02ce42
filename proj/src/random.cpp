#include "mocnn/random.hpp"

#include <algorithm>
#include <cmath>

namespace mocnn {

std::size_t RandomSource::index(std::size_t n)
{
    const auto scaled = static_cast<std::size_t>(std::floor(uniform01() * static_cast<double>(n)));
    return std::min(scaled, n - 1);
}

double Rng::uniform01()
{
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

} // namespace mocnn
