#include "clbf/commands.hpp"

int main(int argc, char** argv) { return clbf::run_cli(argc, argv); }
