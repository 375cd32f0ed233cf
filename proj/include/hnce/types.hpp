#pragma once

#include <cstddef>

namespace hnce {

using InputId = std::size_t;
using LabelId = std::size_t;

}  // namespace hnce
