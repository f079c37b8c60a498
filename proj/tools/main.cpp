#include "pnfc/cli.hpp"

int main(int argc, char** argv) { return pnfc::cli_main(argc, argv); }
