#include "magsense/cli.hpp"

int main(int argc, char** argv) { return magsense::cli::run(argc, argv); }
