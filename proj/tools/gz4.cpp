#include "gz4/cli.hpp"

int main(int argc, char** argv) { return gz4::cli::run(argc, argv); }
