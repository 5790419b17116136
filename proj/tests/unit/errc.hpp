#pragma once

#include <gtest/gtest.h>

#include "netfab/common.hpp"

#define EXPECT_ERRC(stmt, errc)                                       \
  do {                                                                \
    try {                                                             \
      stmt;                                                           \
      ADD_FAILURE() << "expected " << netfab::to_string(errc);        \
    } catch (const netfab::Error& e_) {                               \
      EXPECT_EQ(e_.code(), errc) << e_.what();                        \
    }                                                                 \
  } while (0)
