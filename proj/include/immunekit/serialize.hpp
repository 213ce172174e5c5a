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
#ifndef IMMUNEKIT_SERIALIZE_HPP_
#define IMMUNEKIT_SERIALIZE_HPP_

#include <ostream>
#include <string>
#include <string_view>

#include <json.hpp>

#include "immunekit/tensor.hpp"

namespace immunekit {

std::string fnv1a_hex(std::string_view s);

// Renders a double with 17 significant digits, enough to round trip any
// binary64 value exactly through decimal.
std::string render_double(double x);

// Writes `"shape":[...],"values":[...]` (no surrounding braces) so callers can
// splice tensors into larger objects.
void write_tensor_json(std::ostream& os, const Tensor& t);

Tensor read_tensor_json(const nlohmann::json& obj);

}  // namespace immunekit

#endif  // IMMUNEKIT_SERIALIZE_HPP_
