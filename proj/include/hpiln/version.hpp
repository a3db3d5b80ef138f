#ifndef HPILN_VERSION_HPP_
#define HPILN_VERSION_HPP_

namespace hpiln {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace hpiln

#endif  // HPILN_VERSION_HPP_
