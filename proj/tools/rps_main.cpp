#include "rps/cli.hpp"

int main(int argc, char** argv) { return rps::run_cli(argc, argv); }
