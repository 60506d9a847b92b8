#include "cli.hpp"

int main(int argc, char** argv) { return normint::cli::cli_main(argc, argv); }
