/* Copyright 2026 The ImmuneKit Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#include "immunekit/serialize.hpp"

#include <cstdio>

namespace immunekit {

std::string fnv1a_hex(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string render_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_tensor_json(std::ostream& os, const Tensor& t) {
  os << "\"shape\":[";
  for (std::size_t i = 0; i < t.shape.size(); ++i)
    os << (i ? "," : "") << t.shape[i];
  os << "],\"values\":[";
  for (std::size_t i = 0; i < t.v.size(); ++i)
    os << (i ? "," : "") << render_double(t.v[i]);
  os << "]";
}

Tensor read_tensor_json(const nlohmann::json& obj) {
  Tensor t;
  t.shape = obj.at("shape").get<std::vector<std::size_t>>();
  t.v = obj.at("values").get<std::vector<double>>();
  std::size_t n = 1;
  for (std::size_t d : t.shape) n *= d;
  if (n != t.v.size())
    throw ConsistencyError("tensor: shape " + shape_str(t.shape) +
                           " does not match value count " +
                           std::to_string(t.v.size()));
  return t;
}

}  // namespace immunekit
