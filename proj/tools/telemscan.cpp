#include "telemscan/cli.hpp"

int main(int argc, char** argv) { return telemscan::cli::run(argc, argv); }
