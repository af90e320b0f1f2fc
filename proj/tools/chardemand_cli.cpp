#include "chardemand/cli.hpp"

int main(int argc, char** argv) { return chardemand::cli::run(argc, argv); }
