#include "beamcast/cli.hpp"

int main(int argc, char** argv) { return beamcast::cli::run(argc, argv); }
