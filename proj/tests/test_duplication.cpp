#include <doctest.h>

TEST_SUITE_BEGIN("duplication");

TEST_SUITE_END();
