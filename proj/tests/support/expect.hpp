#pragma once

#include <gtest/gtest.h>

#include "picdna/error.hpp"

namespace picdna::fixtures {

inline constexpr long long any_detail = -2;

template <class F>
void expect_error(ErrorCode code, F&& f, long long detail = any_detail) {
  try {
    f();
    ADD_FAILURE() << "expected error " << to_string(code);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), code) << e.what();
    if (detail != any_detail) {
      EXPECT_EQ(e.detail(), detail) << e.what();
    }
  }
}

}  // namespace picdna::fixtures
