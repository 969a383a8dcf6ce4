#include "cli.hpp"

int main(int argc, char** argv) { return kronrisk::cli::run(argc, argv); }
