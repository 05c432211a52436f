#include "cli.hpp"

int main(int argc, char** argv) { return anchor_refine::cli::run(argc, argv); }
