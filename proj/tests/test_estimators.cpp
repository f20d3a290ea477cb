#include <doctest.h>

TEST_SUITE_BEGIN("estimators");

TEST_SUITE_END();
