#include "uwir/cli/cli.hpp"

int main(int argc, char** argv) { return uwir::cli::run(argc, argv); }
