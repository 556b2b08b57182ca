// SPDX-License-Identifier: Apache-2.0
#include "bevseg/core/common.hpp"

#include <cstdio>

namespace bevseg {

std::string hex64(uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return std::string(buf);
}

}  // namespace bevseg
