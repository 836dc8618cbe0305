#include "shareboost/cli.hpp"

int main(int argc, char** argv) { return shareboost::run_cli(argc, argv); }
