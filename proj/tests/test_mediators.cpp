#include <doctest.h>

TEST_SUITE_BEGIN("mediators");

TEST_SUITE_END();
