#include "tcl2spin/cli.hpp"

int main(int argc, char** argv) { return tcl2spin::cli::run(argc, argv); }
