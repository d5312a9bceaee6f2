#include "muchlac/cli.hpp"

int main(int argc, char** argv) { return muchlac::cli::run(argc, argv); }
