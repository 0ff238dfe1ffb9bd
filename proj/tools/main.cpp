#include "xmm/cli.hpp"

int main(int argc, char** argv) { return xmm::cli::dispatch(argc, argv); }
