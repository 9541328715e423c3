#include "cli.h"

int main(int argc, char** argv) { return compresslab::run_cli(argc, argv); }
