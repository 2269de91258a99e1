#include "cgostab/cli.hpp"

int main(int argc, char** argv) { return cgostab::cli_main(argc, argv); }
