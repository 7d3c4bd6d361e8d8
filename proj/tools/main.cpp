#include "dpobs/cli.hpp"

int main(int argc, char** argv) { return dpobs::cli::run(argc, argv); }
