#include "stylectl/cli.hpp"

int main(int argc, char** argv) { return stylectl::cli::run(argc, argv); }
