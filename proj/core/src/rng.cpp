#include "evoae/rng.hpp"

#include <sstream>

#include "evoae/error.hpp"

namespace evoae {

std::string rng_state(const Rng& rng) {
    std::ostringstream out;
    out << rng;
    return out.str();
}

void restore_rng_state(Rng& rng, const std::string& state) {
    std::istringstream in(state);
    in >> rng;
    if (!in) throw FormatError("corrupt generator state");
}

} // namespace evoae
