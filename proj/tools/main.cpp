#include "imed/cli.hpp"

int main(int argc, char** argv) { return imed::cli_main(argc, argv); }
