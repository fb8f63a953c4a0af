#include "r1als/cli.hpp"

int main(int argc, char** argv) { return r1als::run_cli(argc, argv); }
