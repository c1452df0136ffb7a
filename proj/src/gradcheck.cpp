#include "hoifit/geom.hpp"
