#ifndef TANGENCYLAB_TANGENCYLAB_HPP_
#define TANGENCYLAB_TANGENCYLAB_HPP_

#include "cantor.hpp"
#include "cascade.hpp"
#include "core.hpp"
#include "io.hpp"
#include "model.hpp"
#include "orbits.hpp"
#include "parallel.hpp"
#include "quadratic.hpp"
#include "renorm.hpp"

#endif // TANGENCYLAB_TANGENCYLAB_HPP_
