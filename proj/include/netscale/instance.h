/* Copyright 2026 The Netscale Authors. All Rights Reserved.

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

#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace netscale {

enum class Role { kPrefill, kDecode, kColocated };

std::string_view to_string(Role role);

// A placed serving instance: the GPUs that jointly hold one parameter copy.
struct InstanceRef {
  int id = 0;
  int host = 0;
  std::vector<int> gpus;

  bool operator==(const InstanceRef&) const = default;
};

}  // namespace netscale
