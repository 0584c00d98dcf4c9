#include "ldexpand/cli.hpp"

int main(int argc, char** argv) { return ldexpand::run_cli(argc, argv); }
