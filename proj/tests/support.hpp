#pragma once

#include <string>

#include "rpsopt/io.hpp"
#include "rpsopt/model.hpp"

namespace testing {

inline std::string data_path(const std::string& name) { return std::string(RPSOPT_DATA_DIR) + "/" + name; }

inline rpsopt::ValidatedInstance load_fixture(const std::string& name) {
  return rpsopt::validate_instance(rpsopt::load_instance(data_path(name)));
}

}  // namespace testing
