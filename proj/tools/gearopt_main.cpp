#include "gearopt/cli.hpp"

int main(int argc, char** argv) { return gearopt::cli::run_cli(argc, argv); }
