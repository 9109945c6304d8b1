#include "bevforge/classes.hpp"

namespace bevforge::classes {

const char* class_name(std::uint8_t id) {
  switch (id) {
    case kRoad: return "road";
    case kSidewalk: return "sidewalk";
    case kBuilding: return "building";
    case kTerrain: return "terrain";
    case kPerson: return "person";
    case kTwoWheeler: return "2-wheeler";
    case kCar: return "car";
    case kTruck: return "truck";
    case kVoid: return "void";
  }
  return "unknown";
}

std::array<std::uint8_t, 3> class_color(std::uint8_t id) {
  switch (id) {
    case kRoad: return {128, 64, 128};
    case kSidewalk: return {244, 35, 232};
    case kBuilding: return {70, 70, 70};
    case kTerrain: return {152, 251, 152};
    case kPerson: return {220, 20, 60};
    case kTwoWheeler: return {119, 11, 32};
    case kCar: return {0, 0, 142};
    case kTruck: return {0, 0, 70};
  }
  return {0, 0, 0};
}

bool is_static_class(std::uint8_t id) {
  return id == kRoad || id == kSidewalk || id == kBuilding || id == kTerrain;
}

std::optional<int> static_priority(std::uint8_t id) {
  switch (id) {
    case kRoad: return 0;
    case kTerrain: return 1;
    case kSidewalk: return 2;
    case kBuilding: return 3;
  }
  return std::nullopt;
}

}  // namespace bevforge::classes
