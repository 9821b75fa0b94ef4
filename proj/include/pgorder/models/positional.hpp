#pragma once

#include <cmath>
#include <cstddef>

#include "pgorder/numcore/array.hpp"

namespace pgo {

/// Fixed sine/cosine signal: channel 2i holds sin(pos / 10000^(2i/d)), channel 2i+1 the cosine.
template <class T>
nc::Array<T> sinusoidal_encoding(std::size_t positions, std::size_t dim) {
  nc::Array<T> pe({positions, dim});
  for (std::size_t pos = 0; pos < positions; ++pos) {
    for (std::size_t i = 0; i < dim; i += 2) {
      const double angle = static_cast<double>(pos) / std::pow(10000.0, static_cast<double>(i) / static_cast<double>(dim));
      pe(pos, i) = static_cast<T>(std::sin(angle));
      if (i + 1 < dim) pe(pos, i + 1) = static_cast<T>(std::cos(angle));
    }
  }
  return pe;
}

}  // namespace pgo
