#include "pars/cli.hpp"

int main(int argc, char** argv) { return pars::run_cli(argc, argv); }
