#include "spingraph/cli.hpp"

int main(int argc, char** argv) { return spingraph::run_cli(argc, argv); }
