#include "homtom/cli.hpp"

int main(int argc, char** argv) { return homtom::run_cli(argc, argv); }
