#include <doctest.h>

TEST_SUITE_BEGIN("effects");

TEST_SUITE_END();
