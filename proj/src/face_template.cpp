#include <array>
#include <cmath>

#include "warpfake/geometry.hpp"

namespace warpfake {

namespace ibug {

const std::array<std::size_t, kLandmarkCount>& mirror_index() {
  static const std::array<std::size_t, kLandmarkCount> table = [] {
    std::array<std::size_t, kLandmarkCount> m{};
    for (std::size_t i = 0; i < kLandmarkCount; ++i) m[i] = i;
    for (std::size_t i = kJawBegin; i < kJawEnd; ++i) m[i] = kJawEnd - 1 - i;
    constexpr std::size_t pairs[][2] = {
        {17, 26}, {18, 25}, {19, 24}, {20, 23}, {21, 22},  // brows
        {31, 35}, {32, 34},                                // nostrils
        {36, 45}, {37, 44}, {38, 43}, {39, 42}, {40, 47}, {41, 46},  // eyes
        {48, 54}, {49, 53}, {50, 52}, {55, 59}, {56, 58},  // outer lip
        {60, 64}, {61, 63}, {65, 67},                      // inner lip
    };
    for (const auto& p : pairs) {
      m[p[0]] = p[1];
      m[p[1]] = p[0];
    }
    return m;
  }();
  return table;
}

}  // namespace ibug

namespace {

// Mean iBUG-68 face shape, made exactly left/right symmetric about x = 0.5,
// centered on (0.5, 0.5), and scaled so every point lies in [0.05, 0.95].
constexpr std::array<Point2, kLandmarkCount> kMeanShape = {{
    {0.092579709, 0.282990441},
    {0.094541864, 0.391415468},
    {0.105198955, 0.500662763},
    {0.126700473, 0.608270242},
    {0.168334944, 0.708471239},
    {0.232945409, 0.796409706},
    {0.311606992, 0.871311799},
    {0.399976760, 0.932415072},
    {0.500000000, 0.950000000},
    {0.600023240, 0.932415072},
    {0.688393008, 0.871311799},
    {0.767054591, 0.796409706},
    {0.831665056, 0.708471239},
    {0.873299527, 0.608270242},
    {0.894801045, 0.500662763},
    {0.905458136, 0.391415468},
    {0.907420291, 0.282990441},
    {0.177102175, 0.202188503},
    {0.228022298, 0.162284248},
    {0.296202927, 0.152072828},
    {0.366306008, 0.163390635},
    {0.432785194, 0.191606046},
    {0.567214806, 0.191606046},
    {0.633693992, 0.163390635},
    {0.703797073, 0.152072828},
    {0.771977702, 0.162284248},
    {0.822897825, 0.202188503},
    {0.500000000, 0.271995202},
    {0.500000000, 0.342854379},
    {0.500000000, 0.413743025},
    {0.500000000, 0.486242132},
    {0.420817105, 0.531606804},
    {0.458720112, 0.547104585},
    {0.500000000, 0.560340232},
    {0.541279888, 0.547104585},
    {0.579182895, 0.531606804},
    {0.257706302, 0.278886363},
    {0.300248909, 0.253768460},
    {0.352314491, 0.254730905},
    {0.396035229, 0.288230220},
    {0.348126948, 0.297780504},
    {0.297411815, 0.297143949},
    {0.603964771, 0.288230220},
    {0.647685509, 0.254730905},
    {0.699751091, 0.253768460},
    {0.742293698, 0.278886363},
    {0.702588185, 0.297143949},
    {0.651873052, 0.297780504},
    {0.341797154, 0.659492812},
    {0.399232212, 0.636243620},
    {0.457906356, 0.625984870},
    {0.500000000, 0.636003810},
    {0.542093644, 0.625984870},
    {0.600767788, 0.636243620},
    {0.658202846, 0.659492812},
    {0.603071585, 0.718724451},
    {0.545675039, 0.745062028},
    {0.500000000, 0.749844519},
    {0.454324961, 0.745062028},
    {0.396928415, 0.718724451},
    {0.366474136, 0.663397437},
    {0.457473617, 0.660795959},
    {0.500000000, 0.665083830},
    {0.542526383, 0.660795959},
    {0.633525864, 0.663397437},
    {0.542893148, 0.691228343},
    {0.500000000, 0.696552272},
    {0.457106852, 0.691228343},
}};

}  // namespace

FaceTemplate::FaceTemplate(const std::array<Point2, kLandmarkCount>& unit_points, int target_size)
    : points_(unit_points), target_size_(target_size) {
  if (target_size < 1) throw InvalidArgument("template target_size must be >= 1");
  for (const Point2& p : points_) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
      throw InvalidArgument("template points must be finite");
    }
  }
}

const FaceTemplate& FaceTemplate::canonical() {
  static const FaceTemplate instance(kMeanShape, 128);
  return instance;
}

std::vector<Point2> FaceTemplate::scaled_points(double scale) const {
  const double side = scale * target_size_;
  std::vector<Point2> out;
  out.reserve(points_.size());
  for (const Point2& p : points_) out.push_back({p.x * side, p.y * side});
  return out;
}

int FaceTemplate::aligned_size(double scale) const {
  const long side = std::lround(scale * target_size_);
  return side < 1 ? 1 : static_cast<int>(side);
}

}  // namespace warpfake
