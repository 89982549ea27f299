#include "newfluence/cli.hpp"

int main(int argc, char** argv) { return newfluence::cli_main(argc, argv); }
