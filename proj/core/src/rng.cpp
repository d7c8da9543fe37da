#include "mffssr/rng.hpp"

#include <sstream>

#include "mffssr/errors.hpp"

namespace mffssr {

std::string Rng::save_state() const {
    std::ostringstream os;
    os << engine_;
    return os.str();
}

void Rng::load_state(const std::string& state) {
    std::istringstream is(state);
    is >> engine_;
    if (is.fail()) throw DataError("Rng::load_state: malformed engine state");
}

}  // namespace mffssr
