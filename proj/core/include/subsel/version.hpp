#ifndef SUBSEL_VERSION_HPP
#define SUBSEL_VERSION_HPP

namespace subsel {
inline constexpr const char* kVersion = "0.1.0";
}

#endif
