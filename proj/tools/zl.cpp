#include "zl/cli.hpp"

int main(int argc, char** argv) { return zl::cli::run(argc, argv); }
