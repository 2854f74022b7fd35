#include "depthgaze/cli.hpp"

int main(int argc, char** argv) { return depthgaze::cli_dispatch(argc, argv); }
