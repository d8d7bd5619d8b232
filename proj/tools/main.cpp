#include "cli.hpp"

int main(int argc, char** argv) { return qdm::run_cli(argc, argv); }
