#include "restmorph/cli.hpp"

int main(int argc, char** argv) { return restmorph::cli_main(argc, argv); }
