#include "bernfit_cli/cli.hpp"

int main(int argc, char** argv) { return bernfit::cli::run_cli(argc, argv); }
