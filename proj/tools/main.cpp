#include "cli.hpp"

int main(int argc, char** argv) { return synct::run_cli(argc, argv); }
