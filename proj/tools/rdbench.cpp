#include "rdbench/cli.hpp"

int main(int argc, char** argv) { return rdbench::run_cli(argc, argv); }
