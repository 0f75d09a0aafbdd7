#include "tdbo/bench.hpp"

int main(int argc, char** argv) { return tdbo::cli_main(argc, argv); }
