#include <doctest.h>

TEST_SUITE_BEGIN("simharness");

TEST_SUITE_END();
