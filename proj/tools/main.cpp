#include "kinrescale/cli.hpp"

int main(int argc, char** argv) { return kinrescale::cli_main(argc, argv); }
