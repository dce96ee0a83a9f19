#include "tkl/cli.hpp"

int main(int argc, char** argv) { return tkl::cli_main(argc, argv); }
