#include "countsel/cli.hpp"

int main(int argc, char** argv) { return countsel::cli_run(argc, argv); }
