#include "vectorworld/scenegraph/se2.hpp"

namespace vw::scene {

double wrap_angle(double a) {
    while (a > M_PI) a -= 2.0 * M_PI;
    while (a <= -M_PI) a += 2.0 * M_PI;
    return a;
}

}  // namespace vw::scene
