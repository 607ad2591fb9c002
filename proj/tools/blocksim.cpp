#include "blocksim/cli.hpp"

int main(int argc, char** argv) { return blocksim::cli::run_command(argc, argv); }
