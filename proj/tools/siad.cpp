#include "siad/cli.hpp"

int main(int argc, char** argv) { return siad::cli::run(argc, argv); }
