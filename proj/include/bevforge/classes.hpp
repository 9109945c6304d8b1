#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>

#include "bevforge/tensor.hpp"

namespace bevforge {

// H x W image of class ids (255 = ignore), and X x Z ground-plane map of the
// same ids.  Both are plain byte tensors; the alias records the axis meaning.
using SemanticMap = Tensor<std::uint8_t>;
using BevMap = Tensor<std::uint8_t>;

}  // namespace bevforge

namespace bevforge::classes {

// Fixed semantic class table.  Ids are file-format-level constants: PGM maps
// and BTR1 label tensors store these bytes directly.
inline constexpr std::uint8_t kRoad = 0;
inline constexpr std::uint8_t kSidewalk = 1;
inline constexpr std::uint8_t kBuilding = 2;
inline constexpr std::uint8_t kTerrain = 3;
inline constexpr std::uint8_t kPerson = 4;
inline constexpr std::uint8_t kTwoWheeler = 5;
inline constexpr std::uint8_t kCar = 6;
inline constexpr std::uint8_t kTruck = 7;
inline constexpr std::uint8_t kVoid = 255;  // ignore label: no vote, no loss, no metric

inline constexpr std::size_t kCount = 8;

inline constexpr std::array<std::uint8_t, 4> kDefaultDynamic = {kPerson, kTwoWheeler, kCar,
                                                                kTruck};

const char* class_name(std::uint8_t id);

// RGB used by --color renders; kVoid and unknown ids map to black.
std::array<std::uint8_t, 3> class_color(std::uint8_t id);

bool is_static_class(std::uint8_t id);

// Overwrite order for static densification: when closed masks overlap, the
// class with the higher rank wins.  Returns nullopt for non-static ids.
std::optional<int> static_priority(std::uint8_t id);

}  // namespace bevforge::classes
