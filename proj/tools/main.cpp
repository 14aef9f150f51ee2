#include "cli.hpp"

int main(int argc, char** argv) { return unicam::cli::run(argc, argv); }
