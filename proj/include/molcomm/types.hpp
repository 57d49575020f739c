#pragma once

#include <cstdint>

#include <Eigen/Core>

namespace molcomm {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using VectorXd = Vector<double>;
using MatrixXd = Matrix<double>;

/// Molecule count observed in one receiver sampling window.
using Count = std::int64_t;
using CountMatrix = Eigen::Matrix<Count, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Binary source symbol. s0 maps to the all-zero release sequence.
enum class Symbol : std::uint8_t { s0 = 0, s1 = 1 };

inline constexpr int index_of(Symbol s) { return static_cast<int>(s); }
inline constexpr Symbol other(Symbol s) { return s == Symbol::s0 ? Symbol::s1 : Symbol::s0; }

}  // namespace molcomm
