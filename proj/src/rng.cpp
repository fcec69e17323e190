#include "promptopt/rng.hpp"

#include <sstream>

#include "promptopt/errors.hpp"

namespace promptopt {

std::string Rng::state() const {
    std::ostringstream os;
    os << engine_;
    return os.str();
}

void Rng::restore(const std::string& state) {
    std::istringstream is(state);
    std::mt19937_64 engine;
    is >> engine;
    if (is.fail()) throw CheckpointError("rng state does not parse");
    engine_ = engine;
}

}  // namespace promptopt
