#include "tagref/cli.hpp"

int main(int argc, char** argv) { return tagref::run_cli(argc, argv); }
