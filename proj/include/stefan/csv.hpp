#pragma once

#include <iomanip>
#include <limits>
#include <sstream>
#include <string>

namespace stefan {

/// Shortest text that carries 17 significant digits.
inline std::string num17(double x) {
    std::ostringstream os;
    os << std::setprecision(17) << x;
    return os.str();
}

}  // namespace stefan
