#include "eagcl/cli.hpp"

int main(int argc, char** argv) { return eagcl::run_cli(argc, argv); }
