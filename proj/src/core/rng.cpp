// SPDX-License-Identifier: Apache-2.0
#include "bevseg/core/rng.hpp"

#include <sstream>

namespace bevseg {

std::string Rng::save_state() const {
  std::ostringstream os;
  os << seed_ << ' ' << eng_;
  return os.str();
}

void Rng::load_state(const std::string& s) {
  std::istringstream is(s);
  is >> seed_ >> eng_;
}

}  // namespace bevseg
