#pragma once

#include <Eigen/Dense>
#include <array>
#include <stdexcept>
#include <string>

namespace densedino {

template <typename Scalar>
using MatX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VecX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Mat = MatX<double>;
using Vec = VecX<double>;
using MatI = Eigen::MatrixXi;
using Index = Eigen::Index;

/// RGB image as three planes in [0,1], indexed (row, col).
struct Image {
  std::array<Mat, 3> c;

  Image() = default;
  Image(Index h, Index w) { resize(h, w); }

  void resize(Index h, Index w) {
    for (auto& p : c) p.setZero(h, w);
  }
  Index height() const { return c[0].rows(); }
  Index width() const { return c[0].cols(); }
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GeometryError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace densedino
