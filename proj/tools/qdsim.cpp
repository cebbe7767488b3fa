#include "qdsim/cli.hpp"

int main(int argc, char** argv) { return qdsim::cli::run(argc, argv); }
