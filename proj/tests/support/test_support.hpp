#pragma once

#include "comformer/error.hpp"
#include "comformer/geometry.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

namespace comformer::testing {

inline Crystal make_crystal(const Mat3& rows, std::vector<Vec3> frac, std::vector<int> species) {
  Lattice lattice(rows);
  std::vector<Vec3> cart;
  for (const auto& f : frac) cart.push_back(lattice.frac_to_cart(f));
  return Crystal(lattice, std::move(cart), std::move(species));
}

inline Mat3 rows_of(const Vec3& a, const Vec3& b, const Vec3& c) {
  Mat3 m;
  m.row(0) = a.transpose();
  m.row(1) = b.transpose();
  m.row(2) = c.transpose();
  return m;
}

inline Crystal cubic_one(double a = 1.0, int z = 84) {
  return make_crystal(a * Mat3::Identity(), {Vec3::Zero()}, {z});
}

inline double max_abs_diff(const Vec3& a, const Vec3& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace comformer::testing

// Asserts that `stmt` throws comformer::Error with the given code.
#define EXPECT_ERROR_CODE(stmt, expected)                                                      \
  do {                                                                                         \
    try {                                                                                      \
      stmt;                                                                                    \
      ADD_FAILURE() << "expected " #expected " from " #stmt;                                   \
    } catch (const ::comformer::Error& err_) {                                                 \
      EXPECT_EQ(err_.code(), ::comformer::ErrorCode::expected) << err_.what();                 \
    }                                                                                          \
  } while (0)
