#pragma once

#include <fstream>
#include <string>

#include "json.hpp"
#include "protodiff/error.hpp"
#include "protodiff/types.hpp"

namespace protodiff::testing {

inline Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

inline Matrix mat1(double x) { return Matrix::Constant(1, 1, x); }

inline nlohmann::json load_fixture(const std::string& name) {
  std::ifstream in(std::string(PROTODIFF_FIXTURES) + "/" + name);
  return nlohmann::json::parse(in);
}

template <class F>
ErrorCode error_code_of(F&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  throw std::runtime_error("expected a protodiff::Error");
}

}  // namespace protodiff::testing
