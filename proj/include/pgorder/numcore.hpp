#pragma once

#include "pgorder/numcore/adam.hpp"
#include "pgorder/numcore/array.hpp"
#include "pgorder/numcore/gradcheck.hpp"
#include "pgorder/numcore/layers.hpp"
#include "pgorder/numcore/tensor.hpp"
